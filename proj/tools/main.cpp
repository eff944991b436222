#include "madapt/cli.hpp"

int main(int argc, char** argv) { return madapt::run_cli(argc, argv); }
