#include "bnbp/cli.hpp"

int main(int argc, char** argv) { return bnbp::cli::main(argc, argv); }
