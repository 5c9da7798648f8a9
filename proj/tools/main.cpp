#include "pipelens/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
	return pipelens::run_cli(argc, argv, std::cout, std::cerr);
}
