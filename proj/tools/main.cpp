#include "facnet/cli.hpp"

int main(int argc, char** argv) { return facnet::run_cli(argc, argv); }
