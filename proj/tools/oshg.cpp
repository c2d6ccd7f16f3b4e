#include "oshg/cli.hpp"

int main(int argc, char** argv) { return oshg::cli::dispatch(argc, argv); }
