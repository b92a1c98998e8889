#include "arraynormal/risk.hpp"

int main(int argc, char** argv) { return arraynormal::cli_main(argc, argv); }
