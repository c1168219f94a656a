#include "trapmodes/cli.hpp"

int main(int argc, char** argv) { return trapmodes::run_cli(argc, argv); }
