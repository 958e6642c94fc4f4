#include "commands.hpp"

int main(int argc, char** argv) { return radflow::cli::run(argc, argv); }
