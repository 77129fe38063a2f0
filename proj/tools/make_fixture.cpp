// Writes a Study A / Study B CSV pair drawn from one of the simulation settings.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "spr/error.hpp"
#include "spr/io.hpp"
#include "spr/simharness.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"synthetic Study A / Study B fixture from a simulation setting"};
    int id = 1;
    std::uint64_t seed = 0;
    std::vector<std::size_t> n_a{400, 400};
    std::vector<std::size_t> n_b{200, 200};
    std::string out_dir;
    app.add_option("--setting", id, "setting id 1-9");
    app.add_option("--seed", seed, "master seed")->required();
    app.add_option("--n-a", n_a, "Study A arm sizes (control treated)")->expected(2);
    app.add_option("--n-b", n_b, "Study B arm sizes (control treated)")->expected(2);
    app.add_option("--out", out_dir, "output directory")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        spr::sim::GenerationOptions options;
        options.n_a = std::max(n_a[0], n_a[1]);
        options.n_b = std::max(n_b[0], n_b[1]);
        const auto data = spr::sim::generate_setting(spr::sim::setting(id), options, spr::Seed(seed));

        fs::create_directories(out_dir);
        std::ofstream a(fs::path(out_dir) / "study_a.csv");
        a << "group,s,y\n";
        for (int g : spr::kArms)
            for (std::size_t i = 0; i < n_a[g]; ++i)
                a << g << ',' << spr::io::format_number(data.study_a.arms[g].surrogates[i]) << ','
                  << spr::io::format_number(data.study_a.arms[g].outcomes[i]) << '\n';
        std::ofstream b(fs::path(out_dir) / "study_b.csv");
        b << "group,s\n";
        for (int g : spr::kArms)
            for (std::size_t i = 0; i < n_b[g]; ++i)
                b << g << ',' << spr::io::format_number(data.study_b.surrogates[g][i]) << '\n';
    } catch (const spr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
