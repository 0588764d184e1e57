#include "sann/cli.hpp"

int main(int argc, char** argv) { return sann::cli::run(argc, argv); }
