#include "latsch/cli.hpp"
int main(int argc, char** argv){ return latsch::run_cli(argc, argv); }
