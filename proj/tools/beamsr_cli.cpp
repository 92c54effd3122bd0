#include "beamsr/commands.hpp"

int main(int argc, char** argv) { return beamsr::run_cli(argc, argv); }
