#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

std::string g_cli_path; // set via --cli=<path>, used by the CLI subprocess tests

int main(int argc, char** argv) {
    std::vector<char*> args;
    for (int i = 0; i < argc; ++i) {
        if (std::strncmp(argv[i], "--cli=", 6) == 0) {
            g_cli_path = argv[i] + 6;
        } else {
            args.push_back(argv[i]);
        }
    }
    doctest::Context ctx(static_cast<int>(args.size()), args.data());
    return ctx.run();
}
