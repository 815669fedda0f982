// wassflow command line: verify | optimize | transport-demo | ot-check.
// Exit codes: 0 ok, 1 failed verification, 2 config error, 3 numerical failure.

#include "wassflow/driver.hpp"

#include "CLI11.hpp"

#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Wasserstein gradient flows for shape and topology optimization"};
    app.require_subcommand(1);

    wassflow::driver::Options opt;
    std::string subcommand;

    auto add_common = [&](CLI::App* sub, bool with_only) {
        sub->add_option("--config", opt.config_path, "config file (INI-style sections)")->required();
        sub->add_option("--out", opt.out_dir, "output directory (overrides [output].dir)");
        sub->add_flag("--quiet", opt.quiet, "suppress stdout report lines");
        if (with_only)
            sub->add_option("--only", opt.only, "run one battery: shape1|shape2|top|dens");
        sub->callback([&, sub] { subcommand = sub->get_name(); });
    };

    add_common(app.add_subcommand("verify", "run the sensitivity verification battery"), true);
    add_common(app.add_subcommand("optimize", "run the Wasserstein gradient flow"), false);
    add_common(app.add_subcommand("transport-demo", "run the continuity-equation solver on a preset"), false);
    add_common(app.add_subcommand("ot-check", "run the optimal-transport oracle suite"), false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    return wassflow::driver::dispatch(subcommand, opt);
}
