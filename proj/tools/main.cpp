#include "opclass/cli.hpp"

int main(int argc, char** argv) {
    return opclass::cli::run_cli(argc, argv);
}
