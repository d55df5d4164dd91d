#include "vlasovlab/harness.hpp"

int main(int argc, char** argv) { return vlasovlab::cli_main(argc, argv); }
