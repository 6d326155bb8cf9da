#include "naht/cli/commands.hpp"

int main(int argc, char** argv) { return naht::cli::run_cli(argc, argv); }
