#include "canseg/cli.h"

int main(int argc, char** argv) { return canseg::run_cli(argc, argv); }
