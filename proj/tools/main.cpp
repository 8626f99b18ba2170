#include "cli.hpp"

int main(int argc, char** argv) { return genens::cli::run(argc, argv); }
