#include "taxodng/model_io.hpp"

#include <bit>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "taxodng/kernels.hpp"
#include "taxodng/linalg.hpp"

namespace taxodng {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model blobs are little-endian; big-endian hosts are unsupported");

void write_blob(const std::string& path, const double* data, std::size_t count) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!f) throw error("short write to " + path);
}

std::vector<double> read_blob(const std::string& path, std::size_t count) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw error("cannot open " + path);
    std::vector<double> out(count);
    f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(f.gcount()) != count * sizeof(double))
        throw error("short read from " + path);
    return out;
}

std::string density_name(DensityMode m) {
    switch (m) {
        case DensityMode::paper_tanh: return "paper_tanh";
        case DensityMode::log_cosh: return "log_cosh";
        case DensityMode::sub_gaussian: return "sub_gaussian";
    }
    throw error("unknown density mode");
}

DensityMode density_from_name(const std::string& s) {
    if (s == "paper_tanh") return DensityMode::paper_tanh;
    if (s == "log_cosh") return DensityMode::log_cosh;
    if (s == "sub_gaussian") return DensityMode::sub_gaussian;
    throw error("unknown density mode " + s);
}

}  // namespace

void save_model(const ModelState& m, const std::vector<std::string>& external_ids,
                const std::string& dir) {
    const std::size_t n = m.transition.w.rows;
    const std::size_t d = m.centered.cols;
    if (external_ids.size() != n) throw error("save_model: id count mismatch");
    std::filesystem::create_directories(dir);

    nlohmann::json j;
    j["format"] = 1;
    j["n"] = n;
    j["d"] = d;
    j["node_order"] = external_ids;
    j["loss_log"] = m.loss_log;
    j["config"] = {
        {"alpha", m.config.alpha},
        {"decay", m.config.decay},
        {"max_iters", m.config.max_iters},
        {"tol", m.config.tol},
        {"rng_seed", m.config.rng_seed},
        {"density", density_name(m.config.density)},
        {"prune_threshold", m.config.prune_threshold},
        {"enforce_acyclic", m.config.enforce_acyclic},
        {"natural_gradient", m.config.natural_gradient},
    };
    std::ofstream mf(dir + "/manifest.json");
    if (!mf) throw error("cannot write " + dir + "/manifest.json");
    mf << j.dump(2) << '\n';

    write_blob(dir + "/W.bin", m.transition.w.a.data(), n * n);
    write_blob(dir + "/Z.bin", m.preprocess.whitener.a.data(), n * n);
    write_blob(dir + "/means.bin", m.preprocess.means.data(), n);
    write_blob(dir + "/Xc.bin", m.centered.a.data(), n * d);
}

StoredModel load_model(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw error("cannot open " + dir + "/manifest.json");
    nlohmann::json j;
    mf >> j;
    const std::size_t n = j.at("n").get<std::size_t>();
    const std::size_t d = j.at("d").get<std::size_t>();

    StoredModel sm;
    sm.external_ids = j.at("node_order").get<std::vector<std::string>>();
    if (sm.external_ids.size() != n) throw error("manifest node_order length mismatch");

    ModelState& m = sm.state;
    m.loss_log = j.at("loss_log").get<std::vector<double>>();
    const auto& c = j.at("config");
    m.config.alpha = c.at("alpha").get<double>();
    m.config.decay = c.at("decay").get<double>();
    m.config.max_iters = c.at("max_iters").get<std::size_t>();
    m.config.tol = c.at("tol").get<double>();
    m.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    m.config.density = density_from_name(c.at("density").get<std::string>());
    m.config.prune_threshold = c.at("prune_threshold").get<double>();
    m.config.enforce_acyclic = c.at("enforce_acyclic").get<bool>();
    m.config.natural_gradient = c.at("natural_gradient").get<bool>();

    m.transition.density = m.config.density;
    m.transition.w = Matrix(n, n);
    m.transition.w.a = read_blob(dir + "/W.bin", n * n);
    m.preprocess.whitener = Matrix(n, n);
    m.preprocess.whitener.a = read_blob(dir + "/Z.bin", n * n);
    m.preprocess.inverse_whitener = linalg::inverse(m.preprocess.whitener);
    m.preprocess.means = read_blob(dir + "/means.bin", n);
    m.centered = Matrix(n, d);
    m.centered.a = read_blob(dir + "/Xc.bin", n * d);

    m.node_order.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.node_order[i] = i;
    m.whitened = kernels::matmul(m.preprocess.whitener, m.centered);
    m.supplementary = kernels::matmul(m.transition.w, m.whitened);
    return sm;
}

}  // namespace taxodng
