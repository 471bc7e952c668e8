#include "qps/cli.hpp"

int main(int argc, char** argv) { return qps::run_cli(argc, argv); }
