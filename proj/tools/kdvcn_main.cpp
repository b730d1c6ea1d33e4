#include "kdvcn/cli.hpp"

int main(int argc, char** argv) { return kdvcn::cli_main(argc, argv); }
