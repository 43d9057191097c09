#include "stag/cli.hpp"

int main(int argc, char** argv) { return stag::cli::run(argc, argv); }
