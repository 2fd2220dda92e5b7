#include "cli.hpp"

int main(int argc, char** argv) { return turbulux::cli::run(argc, argv); }
