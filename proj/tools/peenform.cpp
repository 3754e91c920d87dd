#include "peenform/cli.hpp"

int main(int argc, char** argv) { return peenform::cli::run(argc, argv); }
