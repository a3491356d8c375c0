#include "pam/cli.hpp"

int main(int argc, char** argv) { return pam::cli_main(argc, argv); }
