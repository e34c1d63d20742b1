#include "vcrank/cli.hpp"

int main(int argc, char** argv) { return vcrank::cli::run(argc, argv); }
