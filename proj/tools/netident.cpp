#include <netident/cli.hpp>

int main(int argc, char** argv) { return netident::cli::cli_main(argc, argv); }
