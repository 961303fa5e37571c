#include "cli.hpp"

int main(int argc, char** argv) { return janus::cli::run_cli(argc, argv); }
