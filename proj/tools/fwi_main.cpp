#include "hvfwi/cli.hpp"

int main(int argc, char** argv) { return hvfwi::run_cli(argc, argv); }
