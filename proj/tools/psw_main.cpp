#include "psw/cli.hpp"

int main(int argc, char** argv) { return psw::cli::run(argc, argv); }
