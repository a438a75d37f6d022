#include "fisherkin/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fisherkin/budget.hpp"
#include "fisherkin/numeric.hpp"

namespace fisherkin {

namespace {

std::string strip_extension(const std::string& base) {
    if (base.size() > 4) {
        const std::string tail = base.substr(base.size() - 4);
        if (tail == ".fkh" || tail == ".fkd") return base.substr(0, base.size() - 4);
    }
    return base;
}

std::uint64_t to_le_bits(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    return bits;
}

double from_le_bits(std::uint64_t bits) {
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

} // namespace

void save_density(const Density& mu, const std::string& base) {
    const std::string stem = strip_extension(base);
    nlohmann::ordered_json header;
    header["d"] = mu.grid().dim;
    header["n_particles"] = mu.grid().n_particles;
    header["m"] = mu.grid().m;
    header["period"] = mu.grid().period;
    header["dtype"] = "f64";
    header["order"] = "row-major";

    std::ofstream hf(stem + ".fkh", std::ios::trunc);
    if (!hf) throw format_error("cannot write header " + stem + ".fkh");
    hf << header.dump(2) << '\n';
    hf.close();
    if (!hf) throw format_error("failed writing header " + stem + ".fkh");

    std::ofstream df(stem + ".fkd", std::ios::trunc | std::ios::binary);
    if (!df) throw format_error("cannot write payload " + stem + ".fkd");
    std::vector<char> buf(mu.size() * sizeof(std::uint64_t));
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const std::uint64_t bits = to_le_bits(mu[i]);
        std::memcpy(buf.data() + i * sizeof(bits), &bits, sizeof(bits));
    }
    df.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    df.close();
    if (!df) throw format_error("failed writing payload " + stem + ".fkd");
}

Density load_density(const std::string& base) {
    const std::string stem = strip_extension(base);
    std::ifstream hf(stem + ".fkh");
    if (!hf) throw format_error("cannot open header " + stem + ".fkh");
    nlohmann::json header;
    try {
        hf >> header;
    } catch (const nlohmann::json::exception& e) {
        throw format_error("malformed header " + stem + ".fkh: " + e.what());
    }

    GridSpec grid;
    try {
        grid.dim = header.at("d").get<int>();
        grid.n_particles = header.at("n_particles").get<int>();
        grid.m = header.at("m").get<int>();
        grid.period = header.at("period").get<double>();
        if (header.at("dtype").get<std::string>() != "f64") {
            throw format_error("unsupported dtype in " + stem + ".fkh");
        }
        if (header.at("order").get<std::string>() != "row-major") {
            throw format_error("unsupported order in " + stem + ".fkh");
        }
    } catch (const nlohmann::json::exception& e) {
        throw format_error("incomplete header " + stem + ".fkh: " + e.what());
    }
    try {
        grid.validate();
    } catch (const config_error& e) {
        throw format_error("invalid grid in " + stem + ".fkh: " + e.what());
    } // budget_error propagates: an oversized grid is a refusal, not corruption
    require_within_cap(grid.size() * sizeof(double), "density file payload");

    std::ifstream df(stem + ".fkd", std::ios::binary | std::ios::ate);
    if (!df) throw format_error("cannot open payload " + stem + ".fkd");
    const std::streamsize bytes = df.tellg();
    const std::size_t expected = grid.size() * sizeof(std::uint64_t);
    if (bytes < 0 || static_cast<std::size_t>(bytes) != expected) {
        throw format_error("payload " + stem + ".fkd has " + std::to_string(bytes) +
                           " bytes, expected " + std::to_string(expected));
    }
    df.seekg(0);
    std::vector<char> buf(expected);
    df.read(buf.data(), static_cast<std::streamsize>(expected));
    if (!df) throw format_error("failed reading payload " + stem + ".fkd");

    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, buf.data() + i * sizeof(bits), sizeof(bits));
        vals[i] = from_le_bits(bits);
    }
    try {
        return Density(grid, std::move(vals), Density::Symmetry::check);
    } catch (const config_error& e) {
        throw format_error("density file " + stem + " violates invariants: " + e.what());
    }
}

} // namespace fisherkin
