#include "cghs_commands.hpp"

int main(int argc, char** argv) { return cghs::cli::run(std::vector<std::string>(argv, argv + argc)); }
