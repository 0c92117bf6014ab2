#include "dbql/cli.hpp"

int main(int argc, char** argv) { return dbql::run_cli(argc, argv); }
