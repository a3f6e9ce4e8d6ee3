#include "cli.hpp"
int main(int argc, char** argv) { return vitalspec::cli::run(argc, argv); }
