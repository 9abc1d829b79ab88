#include "hcsp/cli.hpp"

int main(int argc, char** argv) { return hcsp::cli::run(argc, argv); }
