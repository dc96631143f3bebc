#include "lark/cli.hpp"

int main(int argc, char** argv) { return lark::run_cli(argc, argv); }
