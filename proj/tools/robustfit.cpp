#include "robustfit/cli.hpp"

int main(int argc, char** argv) { return robustfit::run_cli(argc, argv); }
