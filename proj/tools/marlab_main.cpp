#include "marlab/cli.hpp"

int main(int argc, char** argv) { return marlab::run_cli(argc, argv); }
