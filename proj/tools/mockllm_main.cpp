#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "riskpipe/errors.hpp"
#include "riskpipe/mock_llm.hpp"

namespace {

// "host:port" -> pair; the last ':' splits so bare hosts get the default port.
std::pair<std::string, int> parse_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) {
        return {bind, 8089};
    }
    const std::string host = bind.substr(0, colon);
    const std::string port_text = bind.substr(colon + 1);
    try {
        return {host.empty() ? "127.0.0.1" : host, std::stoi(port_text)};
    } catch (const std::exception&) {
        throw riskpipe::ConfigError("invalid --bind value: " + bind);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scriptable chat-completions server for offline pipeline runs"};

    std::string script_path;
    std::string bind = "127.0.0.1:8089";
    if (const char* env_bind = std::getenv("RISKPIPE_MOCK_BIND")) {
        bind = env_bind;
    }
    app.add_option("--script", script_path,
                   "Rules file (JSON); without it every request gets a 400");
    app.add_option("--bind", bind, "host:port to listen on (port 0 picks a free port)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const auto [host, port] = parse_bind(bind);
        std::vector<riskpipe::MockRule> rules;
        if (!script_path.empty()) {
            rules = riskpipe::MockLlmServer::load_script(script_path);
        }
        riskpipe::MockLlmServer server(std::move(rules));
        server.start(host, port);
        std::cout << "listening on " << server.endpoint_url() << "\n" << std::flush;
        for (;;) {
            std::this_thread::sleep_for(std::chrono::seconds(3600));
        }
    } catch (const riskpipe::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
