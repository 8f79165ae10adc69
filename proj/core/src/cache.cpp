#include "topoderiv/cache.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace topoderiv {

namespace {

constexpr std::uint64_t kMagic = 0x3144434f52524f43ull;  // "CORROC D1"-style tag

struct ByteSink {
    std::vector<unsigned char> bytes;

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i32(std::int32_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void vec(const Eigen::VectorXd& v) {
        u64(static_cast<std::uint64_t>(v.size()));
        raw(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    }
    void mat(const Eigen::MatrixXd& m) {
        i32(static_cast<std::int32_t>(m.rows()));
        i32(static_cast<std::int32_t>(m.cols()));
        raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    }
    void vec3(const Eigen::Vector3d& v) { raw(v.data(), sizeof(double) * 3); }
    void mat3(const Eigen::Matrix3d& m) { raw(m.data(), sizeof(double) * 9); }
};

struct ByteSource {
    const unsigned char* p = nullptr;
    std::size_t left = 0;
    bool ok = true;

    bool raw(void* out, std::size_t n) {
        if (!ok || n > left) return ok = false;
        std::memcpy(out, p, n);
        p += n;
        left -= n;
        return true;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        raw(&v, sizeof v);
        return v;
    }
    std::int32_t i32() {
        std::int32_t v = 0;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v = 0;
        raw(&v, sizeof v);
        return v;
    }
    bool vec(Eigen::VectorXd& v, std::uint64_t max_size) {
        const std::uint64_t n = u64();
        if (!ok || n > max_size) return ok = false;
        v.resize(static_cast<Eigen::Index>(n));
        return raw(v.data(), sizeof(double) * n);
    }
    bool mat(Eigen::MatrixXd& m) {
        const std::int32_t r = i32();
        const std::int32_t c = i32();
        if (!ok || r < 0 || c < 0 || r > 4096 || c > 4096) return ok = false;
        m.resize(r, c);
        return raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    }
    bool vec3(Eigen::Vector3d& v) { return raw(v.data(), sizeof(double) * 3); }
    bool mat3(Eigen::Matrix3d& m) { return raw(m.data(), sizeof(double) * 9); }
};

void put_model(ByteSink& s, const FarFieldModel& m) {
    s.i32(m.dim);
    s.f64(m.exponent);
    s.i32(m.angular_degree);
    s.u64(m.monomials.size());
    for (const auto& mono : m.monomials)
        for (int k : mono) s.i32(k);
    s.mat(m.power_coef);
    s.vec(m.log_coef);
}

void put_fit(ByteSink& s, const FarFieldFit& f) {
    put_model(s, f.model);
    s.f64(f.predicted_exponent);
    s.i32(f.with_log ? 1 : 0);
    s.f64(f.exponent);
    s.f64(f.free_residual);
    s.f64(f.residual);
    s.f64(f.log_coefficient);
    s.vec3(f.constant_shift);
    s.f64(f.amplitude);
}

bool get_model(ByteSource& s, FarFieldModel& m) {
    m.dim = s.i32();
    m.exponent = s.f64();
    m.angular_degree = s.i32();
    const std::uint64_t n = s.u64();
    if (!s.ok || n > 4096) return s.ok = false;
    m.monomials.resize(n);
    for (auto& mono : m.monomials)
        for (int& k : mono) k = s.i32();
    return s.mat(m.power_coef) && s.vec(m.log_coef, 4096);
}

bool get_fit(ByteSource& s, FarFieldFit& f) {
    if (!get_model(s, f.model)) return false;
    f.predicted_exponent = s.f64();
    f.with_log = s.i32() != 0;
    f.exponent = s.f64();
    f.free_residual = s.f64();
    f.residual = s.f64();
    f.log_coefficient = s.f64();
    s.vec3(f.constant_shift);
    f.amplitude = s.f64();
    return s.ok;
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

CorrectorCache::CorrectorCache(std::string dir) : dir_(std::move(dir)) {
    if (dir_.empty()) throw std::invalid_argument("CorrectorCache: empty directory");
    std::filesystem::create_directories(dir_);
}

std::string CorrectorCache::path_for(std::uint64_t key) const {
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.bin", static_cast<unsigned long long>(key));
    return dir_ + "/" + name;
}

std::uint64_t CorrectorCache::key(const ExteriorWorkspace& ws, CorrectorKind kind,
                                  const CorrectorDrive& drive) const {
    ByteSink s;
    s.str("corrector-cache-v1");
    s.i32(ws.dim());
    s.i32(ws.order());
    s.f64(ws.radius());
    s.f64(ws.h_inner());
    s.f64(ws.grading());
    s.str(ws.shape().describe());
    s.mat(ws.C_in().rep());
    s.mat(ws.C_out().rep());
    const DirectionFan& fan = ws.fan();
    s.i32(fan.dim);
    s.u64(fan.directions.size());
    for (const auto& d : fan.directions) s.vec3(d);
    s.u64(fan.surface_tris.size());
    for (const auto& t : fan.surface_tris)
        for (int k : t) s.i32(k);

    s.i32(static_cast<std::int32_t>(kind));
    s.mat3(drive.strain_const);
    for (const auto& m : drive.strain_linear) s.mat3(m);
    s.vec3(drive.volume_const);
    s.u64(drive.gradient_sources.size());
    for (const auto& [src, weight] : drive.gradient_sources) {
        if (src == nullptr || src->cache_key == 0) return 0;
        s.u64(src->cache_key);
        s.f64(weight);
    }
    return fnv1a(s.bytes.data(), s.bytes.size());
}

bool CorrectorCache::load(std::uint64_t key, const ExteriorWorkspace& ws,
                          CorrectorSolution& out) const {
    std::ifstream in(path_for(key), std::ios::binary);
    std::vector<unsigned char> bytes;
    if (in) {
        in.seekg(0, std::ios::end);
        const auto size = in.tellg();
        in.seekg(0, std::ios::beg);
        if (size > 0) {
            bytes.resize(static_cast<std::size_t>(size));
            in.read(reinterpret_cast<char*>(bytes.data()), size);
        }
        if (!in) bytes.clear();
    }
    const std::size_t overhead = 3 * sizeof(std::uint64_t);
    if (bytes.size() < overhead) {
        ++misses_;
        return false;
    }

    ByteSource s{bytes.data(), bytes.size(), true};
    const std::uint64_t magic = s.u64();
    const std::uint64_t stored_key = s.u64();
    std::uint64_t checksum = 0;
    std::memcpy(&checksum, bytes.data() + bytes.size() - sizeof checksum, sizeof checksum);
    const std::size_t payload = bytes.size() - overhead;
    if (magic != kMagic || stored_key != key ||
        checksum != fnv1a(bytes.data() + 2 * sizeof(std::uint64_t), payload)) {
        ++misses_;
        return false;
    }
    s.left -= sizeof checksum;  // do not read into the trailer

    CorrectorSolution sol;
    sol.kind = static_cast<CorrectorKind>(s.i32());
    sol.dim = s.i32();
    bool good = s.ok && sol.dim == ws.dim();
    for (int i = 0; good && i < 2; ++i) {
        const FemSpace& space = *ws.level(i).space;
        sol.field[i] = FemField(space);
        Eigen::VectorXd coeffs;
        good = s.vec(coeffs, 1ull << 32) && coeffs.size() == space.num_vector_dofs();
        if (good) sol.field[i].coeffs = std::move(coeffs);
        good = good && s.vec3(sol.gauge_shift[i]) && s.mat3(sol.strain_avg_level[i]);
        for (int k = 0; good && k < 3; ++k) good = s.mat3(sol.strain_moment_level[i][k]);
        good = good && get_fit(s, sol.fit_level[i]);
    }
    good = good && s.mat3(sol.strain_average);
    for (int k = 0; good && k < 3; ++k) good = s.mat3(sol.strain_moment[k]);
    good = good && s.vec3(sol.value_average);
    sol.richardson_change = s.f64();
    good = good && s.ok && s.left == 0;
    if (!good) {
        ++misses_;
        return false;
    }
    sol.cache_key = key;
    out = std::move(sol);
    ++hits_;
    return true;
}

void CorrectorCache::store(std::uint64_t key, const CorrectorSolution& sol) const {
    ByteSink s;
    s.i32(static_cast<std::int32_t>(sol.kind));
    s.i32(sol.dim);
    for (int i = 0; i < 2; ++i) {
        s.vec(sol.field[i].coeffs);
        s.vec3(sol.gauge_shift[i]);
        s.mat3(sol.strain_avg_level[i]);
        for (int k = 0; k < 3; ++k) s.mat3(sol.strain_moment_level[i][k]);
        put_fit(s, sol.fit_level[i]);
    }
    s.mat3(sol.strain_average);
    for (int k = 0; k < 3; ++k) s.mat3(sol.strain_moment[k]);
    s.vec3(sol.value_average);
    s.f64(sol.richardson_change);

    ByteSink file;
    file.u64(kMagic);
    file.u64(key);
    file.raw(s.bytes.data(), s.bytes.size());
    file.u64(fnv1a(s.bytes.data(), s.bytes.size()));

    const std::string final_path = path_for(key);
    const std::string tmp_path = final_path + ".tmp";
    {
        std::ofstream outf(tmp_path, std::ios::binary | std::ios::trunc);
        if (!outf) throw std::runtime_error("CorrectorCache: cannot write " + tmp_path);
        outf.write(reinterpret_cast<const char*>(file.bytes.data()),
                   static_cast<std::streamsize>(file.bytes.size()));
        if (!outf) throw std::runtime_error("CorrectorCache: short write to " + tmp_path);
    }
    std::filesystem::rename(tmp_path, final_path);
}

}  // namespace topoderiv
