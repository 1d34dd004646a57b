#include "aad/cli.hpp"

int main(int argc, char** argv) { return aad::run_cli(argc, argv); }
