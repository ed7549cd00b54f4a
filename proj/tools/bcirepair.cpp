#include "bcirepair/cli.hpp"

int main(int argc, char** argv) { return bcirepair::cli_main(argc, argv); }
