#include "cli.hpp"

int main(int argc, char** argv) { return ltprune::cli::run(argc, argv); }
