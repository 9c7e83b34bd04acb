#include "zs3/embeddings.hpp"

#include "zs3/errors.hpp"
#include "zs3/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace zs3 {

ClassCatalog ClassCatalog::generic(std::size_t n_classes) {
    ClassCatalog cat;
    cat.names.reserve(n_classes);
    for (std::size_t i = 0; i < n_classes; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "class%02zu", i);
        cat.names.emplace_back(buf);
    }
    cat.seen.assign(n_classes, true);
    if (n_classes > 0) cat.background_id = 0;
    return cat;
}

std::size_t ClassCatalog::id_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw LookupError("unknown class name '" + name + "'");
}

std::vector<std::size_t> ClassCatalog::seen_ids() const {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < size(); ++i)
        if (seen[i]) ids.push_back(i);
    return ids;
}

std::vector<std::size_t> ClassCatalog::unseen_ids() const {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < size(); ++i)
        if (!seen[i]) ids.push_back(i);
    return ids;
}

const double* ClassEmbeddingTable::row(std::size_t class_id) const {
    if (class_id >= vectors.rows) throw LookupError("class id " + std::to_string(class_id) + " out of catalog");
    return vectors.row_ptr(class_id);
}

Matrix ClassEmbeddingTable::embedding_of(std::size_t class_id) const {
    const double* r = row(class_id);
    Matrix m(1, dimension);
    std::copy(r, r + dimension, m.row_ptr(0));
    return m;
}

ClassEmbeddingTable ClassEmbeddingTable::normalized_copy() const {
    ClassEmbeddingTable out = *this;
    for (std::size_t i = 0; i < out.vectors.rows; ++i) {
        double* r = out.vectors.row_ptr(i);
        double norm = 0.0;
        for (std::size_t j = 0; j < dimension; ++j) norm += r[j] * r[j];
        norm = std::sqrt(norm);
        if (norm == 0.0) throw ValueError("cannot normalize zero embedding of class " + std::to_string(i));
        for (std::size_t j = 0; j < dimension; ++j) r[j] /= norm;
    }
    out.normalized = true;
    return out;
}

ClassEmbeddingTable load_embeddings(const std::string& path, const ClassCatalog& catalog, bool normalize) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embeddings file '" + path + "'");

    std::size_t d_a = 0;
    std::vector<bool> resolved(catalog.size(), false);
    Matrix vectors;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string name;
        ss >> name;
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (!ss.eof())
            throw ParseError("embeddings line " + std::to_string(lineno) + ": non-numeric value");
        if (vals.empty()) throw ParseError("embeddings line " + std::to_string(lineno) + ": no values");
        if (d_a == 0) {
            d_a = vals.size();
            vectors = Matrix(catalog.size(), d_a);
        } else if (vals.size() != d_a) {
            throw ParseError("embeddings line " + std::to_string(lineno) + ": dimension " +
                             std::to_string(vals.size()) + " != " + std::to_string(d_a));
        }
        // Names outside the catalog are skipped.
        std::size_t id = catalog.size();
        for (std::size_t i = 0; i < catalog.size(); ++i)
            if (catalog.names[i] == name) { id = i; break; }
        if (id == catalog.size()) continue;
        if (resolved[id]) throw ParseError("embeddings line " + std::to_string(lineno) + ": duplicate class '" + name + "'");
        resolved[id] = true;
        for (std::size_t j = 0; j < d_a; ++j) {
            if (!std::isfinite(vals[j]))
                throw ParseError("embeddings line " + std::to_string(lineno) + ": non-finite value");
            vectors(id, j) = vals[j];
        }
    }
    for (std::size_t i = 0; i < catalog.size(); ++i)
        if (!resolved[i]) throw LookupError("class '" + catalog.names[i] + "' missing from embeddings file");

    ClassEmbeddingTable table;
    table.dimension = d_a;
    table.vectors = std::move(vectors);
    table.normalized = false;
    if (normalize) return table.normalized_copy();
    return table;
}

void save_embeddings(const ClassEmbeddingTable& table, const ClassCatalog& catalog, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write embeddings file '" + path + "'");
    char buf[64];
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        out << catalog.names[i];
        for (std::size_t j = 0; j < table.dimension; ++j) {
            std::snprintf(buf, sizeof(buf), " %.17g", table.vectors(i, j));
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

std::size_t cosine_nearest(const ClassEmbeddingTable& table, const std::vector<double>& query,
                           const std::vector<std::size_t>& restrict_ids) {
    if (query.size() != table.dimension) throw DimensionError("cosine_nearest: query dimension mismatch");
    if (restrict_ids.empty()) throw ValueError("cosine_nearest: empty restriction set");
    double qq = 0.0;
    for (double v : query) {
        if (!std::isfinite(v)) throw ValueError("cosine_nearest: non-finite query");
        qq += v * v;
    }
    if (qq == 0.0) throw ValueError("cosine_nearest: zero query vector");

    std::vector<std::size_t> ids = restrict_ids;
    std::sort(ids.begin(), ids.end());
    double best = -2.0;
    std::size_t best_id = ids.front();
    for (std::size_t id : ids) {
        const double* r = table.row(id);
        double rr = 0.0, qr = 0.0;
        for (std::size_t j = 0; j < table.dimension; ++j) {
            rr += r[j] * r[j];
            qr += r[j] * query[j];
        }
        const double sim = rr == 0.0 ? -1.0 : qr / std::sqrt(rr * qq);
        if (sim > best) {
            best = sim;
            best_id = id;
        }
    }
    return best_id;
}

namespace {

/// Seeded random orthonormal basis, rows of the returned matrix.
Matrix orthonormal_basis(std::size_t dim, RngStream& rng) {
    Matrix basis = Matrix::randn(dim, dim, rng);
    for (std::size_t i = 0; i < dim; ++i) {
        double* ri = basis.row_ptr(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double* rk = basis.row_ptr(k);
            double dot = 0.0;
            for (std::size_t j = 0; j < dim; ++j) dot += ri[j] * rk[j];
            for (std::size_t j = 0; j < dim; ++j) ri[j] -= dot * rk[j];
        }
        double norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) norm += ri[j] * ri[j];
        norm = std::sqrt(norm);
        if (norm < 1e-9) throw NumericError("orthonormal basis degenerated");
        for (std::size_t j = 0; j < dim; ++j) ri[j] /= norm;
    }
    return basis;
}

void set_scaled_row(Matrix& dst, std::size_t row, const std::vector<double>& dir, double scale) {
    for (std::size_t j = 0; j < dst.cols; ++j) dst(row, j) = scale * dir[j];
}

} // namespace

ClassEmbeddingTable make_fixture_embeddings(const ClassCatalog& catalog, std::size_t d_a,
                                            std::uint64_t seed, double pair_cos) {
    if (d_a < 2) throw ConfigError("fixture embeddings need d_a >= 2");
    if (!(pair_cos > 0.0 && pair_cos < 1.0)) throw ConfigError("pair_cos must be in (0,1)");

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < catalog.size(); ++i)
        if (!catalog.background_id || *catalog.background_id != i) members.push_back(i);
    const std::size_t n_pairs = members.size() / 2;
    const bool has_lone = members.size() % 2 == 1;
    std::size_t needed = 2 * n_pairs;
    if (has_lone && n_pairs < 2) needed += 1;
    if (catalog.background_id && n_pairs < 2) needed += 1;
    if (needed > d_a)
        throw ConfigError("fixture embeddings need d_a >= " + std::to_string(needed) + " for " +
                          std::to_string(catalog.size()) + " classes");

    RngStream rng = RngStream::named(seed, "embedding-fixture");
    Matrix basis = orthonormal_basis(d_a, rng);
    const double scale = std::sqrt(static_cast<double>(d_a));
    const double tilt = std::sqrt(1.0 - pair_cos * pair_cos);

    Matrix vectors(catalog.size(), d_a, 0.0);
    std::vector<double> dir(d_a);
    auto basis_row = [&](std::size_t k) {
        return std::vector<double>(basis.row_ptr(k), basis.row_ptr(k) + d_a);
    };

    for (std::size_t k = 0; k < n_pairs; ++k) {
        const std::vector<double> archetype = basis_row(2 * k);
        const std::vector<double> detail = basis_row(2 * k + 1);
        set_scaled_row(vectors, members[2 * k], archetype, scale);
        for (std::size_t j = 0; j < d_a; ++j) dir[j] = pair_cos * archetype[j] + tilt * detail[j];
        set_scaled_row(vectors, members[2 * k + 1], dir, scale);
    }
    std::size_t next_free = 2 * n_pairs;
    if (has_lone) {
        const std::size_t lone = members[2 * n_pairs];
        if (n_pairs >= 2) {
            // Alternating mix of the archetypes, unit norm.
            std::fill(dir.begin(), dir.end(), 0.0);
            for (std::size_t k = 0; k < n_pairs; ++k) {
                const double sign = k % 2 == 0 ? 1.0 : -1.0;
                const double* b = basis.row_ptr(2 * k);
                for (std::size_t j = 0; j < d_a; ++j) dir[j] += sign * b[j];
            }
            const double inv = 1.0 / std::sqrt(static_cast<double>(n_pairs));
            for (double& v : dir) v *= inv;
            set_scaled_row(vectors, lone, dir, scale);
        } else {
            set_scaled_row(vectors, lone, basis_row(next_free++), scale);
        }
    }
    if (catalog.background_id) {
        const std::size_t bg = *catalog.background_id;
        if (n_pairs >= 2) {
            std::fill(dir.begin(), dir.end(), 0.0);
            for (std::size_t k = 0; k < n_pairs; ++k) {
                const double* b = basis.row_ptr(2 * k);
                for (std::size_t j = 0; j < d_a; ++j) dir[j] += b[j];
            }
            const double inv = 1.0 / std::sqrt(static_cast<double>(n_pairs));
            for (double& v : dir) v *= inv;
            set_scaled_row(vectors, bg, dir, scale);
        } else {
            set_scaled_row(vectors, bg, basis_row(next_free++), scale);
        }
    }

    ClassEmbeddingTable table;
    table.dimension = d_a;
    table.vectors = std::move(vectors);
    table.normalized = false;
    return table;
}

} // namespace zs3
