#include "gspn/cli.hpp"

int main(int argc, char** argv) { return gspn::cli::run(argc, argv); }
