#include "imrdmd/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace imrdmd {
namespace {

constexpr char kMagic[8] = {'I', 'M', 'R', 'D', 'M', 'D', 'T', 'R'};
constexpr std::uint8_t kHasChildren = 1;
constexpr std::uint8_t kHasCache = 2;

class Writer {
public:
    void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    template <typename U>
    void uint(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void i32(std::int32_t v) { uint(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { uint(static_cast<std::uint64_t>(v)); }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
    void c128(Complex v) {
        f64(v.real());
        f64(v.imag());
    }
    void reals(const double* p, Index n) {
        for (Index i = 0; i < n; ++i) f64(p[i]);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) throw Error("tree file truncated at byte " + std::to_string(pos_));
    }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    template <typename U>
    U uint() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(uint<std::uint32_t>()); }
    std::int64_t i64() { return static_cast<std::int64_t>(uint<std::uint64_t>()); }
    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
    Complex c128() {
        const double re = f64();
        return {re, f64()};
    }
    Index count(Index limit) {
        const std::int64_t v = i64();
        if (v < 0 || v > limit) throw Error("tree file: implausible size " + std::to_string(v));
        return static_cast<Index>(v);
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::string_view in_;
    std::size_t pos_ = 0;
};

void write_matrix(Writer& w, const Matrix& m) { w.reals(m.data(), m.size()); }

Matrix read_matrix(Reader& r, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
    return m;
}

void write_node(Writer& w, const MrDmdNode& node, Index sensors) {
    std::uint8_t flags = 0;
    if (!node.children.empty()) flags |= kHasChildren;
    if (node.svd_cache) flags |= kHasCache;
    w.i32(node.level);
    w.i64(node.t_start);
    w.i64(node.t_end);
    w.i64(node.stride);
    w.f64(node.rho);
    w.uint(flags);
    const DmdResult* d = node.dmd.get();
    const Index r = d ? d->rank() : 0;
    w.i64(r);
    w.f64(d ? d->delta_t : 0.0);
    if (d) {
        for (Index i = 0; i < r; ++i) w.c128(d->eigenvalues[i]);
        for (Index i = 0; i < r; ++i) w.c128(d->exponents[i]);
        for (Index i = 0; i < r; ++i) w.c128(d->amplitudes[i]);
        for (Index j = 0; j < r; ++j) {
            for (Index p = 0; p < sensors; ++p) w.c128(d->modes(p, j));
        }
    }
    if (node.svd_cache) {
        const SvdCache& c = *node.svd_cache;
        w.i64(c.factors.rows());
        w.i64(c.factors.cols());
        w.i64(c.factors.rank());
        w.reals(c.factors.sigma.data(), c.factors.sigma.size());
        write_matrix(w, c.factors.u);
        write_matrix(w, c.factors.v);
        w.i64(c.factors.updates);
        w.reals(c.first_snapshot.data(), c.first_snapshot.size());
        w.reals(c.last_snapshot.data(), c.last_snapshot.size());
        w.i64(c.stride);
        w.i64(c.next_offset);
    }
    if (!node.children.empty()) {
        if (node.children.size() != 2) throw Error("serialize_tree: node must have 0 or 2 children");
        write_node(w, node.children[0], sensors);
        write_node(w, node.children[1], sensors);
    }
}

MrDmdNode read_node(Reader& r, Index sensors, int depth) {
    if (depth > 4096) throw Error("tree file: nesting too deep");
    constexpr Index kLimit = Index{1} << 40;
    MrDmdNode node;
    node.level = r.i32();
    node.t_start = r.i64();
    node.t_end = r.i64();
    node.stride = r.i64();
    node.rho = r.f64();
    const auto flags = r.uint<std::uint8_t>();
    const Index rank = r.count(kLimit);
    auto d = std::make_shared<DmdResult>();
    d->delta_t = r.f64();
    d->eigenvalues.resize(rank);
    d->exponents.resize(rank);
    d->amplitudes.resize(rank);
    d->modes.resize(sensors, rank);
    for (Index i = 0; i < rank; ++i) d->eigenvalues[i] = r.c128();
    for (Index i = 0; i < rank; ++i) d->exponents[i] = r.c128();
    for (Index i = 0; i < rank; ++i) d->amplitudes[i] = r.c128();
    for (Index j = 0; j < rank; ++j) {
        for (Index p = 0; p < sensors; ++p) d->modes(p, j) = r.c128();
    }
    node.dmd = std::move(d);
    if (flags & kHasCache) {
        auto c = std::make_shared<SvdCache>();
        const Index rows = r.count(kLimit);
        const Index cols = r.count(kLimit);
        const Index k = r.count(kLimit);
        if (rows != sensors) throw Error("tree file: cache rows do not match sensor count");
        c->factors.sigma.resize(k);
        for (Index i = 0; i < k; ++i) c->factors.sigma[i] = r.f64();
        c->factors.u = read_matrix(r, rows, k);
        c->factors.v = read_matrix(r, cols, k);
        c->factors.updates = r.i64();
        c->first_snapshot = read_matrix(r, rows, 1).col(0);
        c->last_snapshot = read_matrix(r, rows, 1).col(0);
        c->stride = r.i64();
        c->next_offset = r.i64();
        node.svd_cache = std::move(c);
    }
    if (flags & kHasChildren) {
        node.children.push_back(read_node(r, sensors, depth + 1));
        node.children.push_back(read_node(r, sensors, depth + 1));
    }
    return node;
}

} // namespace

nlohmann::json rank_policy_to_json(const RankPolicy& p) {
    switch (p.kind) {
    case RankPolicy::Kind::explicit_rank: return p.rank;
    case RankPolicy::Kind::svht: return "svht";
    case RankPolicy::Kind::full: return "full";
    }
    return "svht";
}

RankPolicy rank_policy_from_json(const nlohmann::json& j) {
    if (j.is_number_integer() && j.get<Index>() > 0) return RankPolicy::fixed(j.get<Index>());
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "svht") return RankPolicy::hard_threshold();
        if (s == "full") return RankPolicy::full_rank();
    }
    throw Error("rank policy must be \"svht\", \"full\" or a positive integer");
}

nlohmann::json config_to_json(const MrDmdConfig& c) {
    nlohmann::json j;
    j["max_levels"] = c.max_levels;
    j["max_cycles"] = c.max_cycles;
    j["rank"] = rank_policy_to_json(c.rank_policy);
    j["operator"] = c.dmd_operator == DmdOperator::exact ? "exact" : "forward_backward";
    j["split_ratio"] = c.split_ratio;
    j["min_window"] = c.min_window;
    j["cache_all_levels"] = c.cache_all_levels;
    j["cache_max_rank"] = c.cache_max_rank ? nlohmann::json(*c.cache_max_rank) : nlohmann::json(nullptr);
    return j;
}

MrDmdConfig config_from_json(const nlohmann::json& j, MrDmdConfig c) {
    try {
        if (j.contains("max_levels")) c.max_levels = j["max_levels"].get<int>();
        if (j.contains("max_cycles")) c.max_cycles = j["max_cycles"].get<int>();
        if (j.contains("rank")) c.rank_policy = rank_policy_from_json(j["rank"]);
        if (j.contains("operator")) {
            const auto op = j["operator"].get<std::string>();
            if (op == "exact") {
                c.dmd_operator = DmdOperator::exact;
            } else if (op == "forward_backward") {
                c.dmd_operator = DmdOperator::forward_backward;
            } else {
                throw Error("operator must be \"exact\" or \"forward_backward\"");
            }
        }
        if (j.contains("split_ratio")) c.split_ratio = j["split_ratio"].get<double>();
        if (j.contains("min_window")) c.min_window = j["min_window"].get<Index>();
        if (j.contains("cache_all_levels")) c.cache_all_levels = j["cache_all_levels"].get<bool>();
        if (j.contains("cache_max_rank")) {
            if (j["cache_max_rank"].is_null()) {
                c.cache_max_rank.reset();
            } else {
                c.cache_max_rank = j["cache_max_rank"].get<Index>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    return c;
}

std::string serialize_tree(const MrDmdTree& tree) {
    nlohmann::json header;
    header["format"] = "imrdmd-tree";
    header["version"] = kTreeFormatVersion;
    header["endianness"] = "little";
    header["config"] = config_to_json(tree.config);
    header["total_timesteps"] = tree.total_timesteps;
    header["delta_t"] = tree.delta_t;
    header["t0"] = tree.t0;
    header["sensor_ids"] = tree.sensor_ids;
    header["data_energy"] = tree.data_energy;
    header["node_count"] = node_count(tree);
    header["node_record"] =
        "i32 level, i64 t_start, i64 t_end, i64 stride, f64 rho, u8 flags(1 children,2 cache), "
        "i64 rank, f64 delta_t, c128 eigenvalues[rank], c128 exponents[rank], c128 amplitudes[rank], "
        "c128 modes[P*rank] column-major; cache: i64 rows, i64 cols, i64 k, f64 sigma[k], f64 u[rows*k], "
        "f64 v[cols*k], i64 updates, f64 first[rows], f64 last[rows], i64 stride, i64 next_offset";
    const std::string text = header.dump();

    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.uint(kTreeFormatVersion);
    w.uint(static_cast<std::uint64_t>(text.size()));
    w.bytes(text.data(), text.size());
    write_node(w, tree.root, tree.sensors());
    return w.take();
}

MrDmdTree deserialize_tree(std::string_view bytes) {
    Reader r(bytes);
    if (r.bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
        throw Error("not an imrdmd tree file (bad magic)");
    }
    const auto version = r.uint<std::uint32_t>();
    if (version != kTreeFormatVersion) {
        throw Error("unsupported tree format version " + std::to_string(version));
    }
    const auto header_len = r.uint<std::uint64_t>();
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.bytes(static_cast<std::size_t>(header_len)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("tree header: ") + e.what());
    }
    MrDmdTree tree;
    try {
        tree.config = config_from_json(header.at("config"));
        tree.total_timesteps = header.at("total_timesteps").get<Index>();
        tree.delta_t = header.at("delta_t").get<double>();
        tree.t0 = header.at("t0").get<double>();
        tree.sensor_ids = header.at("sensor_ids").get<std::vector<std::string>>();
        tree.data_energy = header.at("data_energy").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("tree header: ") + e.what());
    }
    tree.root = read_node(r, tree.sensors(), 0);
    if (!r.done()) throw Error("tree file has trailing bytes");
    return tree;
}

void save_tree(const MrDmdTree& tree, const std::filesystem::path& path) {
    const std::string bytes = serialize_tree(tree);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

MrDmdTree load_tree(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_tree(bytes);
}

} // namespace imrdmd
