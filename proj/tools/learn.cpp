#include <apartlearn/cli.hpp>

int main(int argc, char** argv) { return apartlearn::run_cli(argc, argv); }
