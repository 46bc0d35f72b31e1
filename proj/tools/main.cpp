#include "ionramp/cli.hpp"

int main(int argc, char** argv) { return ionramp::run_cli(argc, argv); }
