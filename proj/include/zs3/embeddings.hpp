#pragma once

#include "zs3/matrix.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace zs3 {

/// Ordered class list with dense ids 0..|C|-1 and a seen/unseen partition.
struct ClassCatalog {
    std::vector<std::string> names;
    std::vector<bool> seen;                    // per class id
    std::optional<std::size_t> background_id;  // never allowed to be unseen

    std::size_t size() const { return names.size(); }

    /// All classes seen, names "class00".."classNN", class 0 designated background.
    static ClassCatalog generic(std::size_t n_classes);

    std::size_t id_of(const std::string& name) const; // throws LookupError
    std::vector<std::size_t> seen_ids() const;
    std::vector<std::size_t> unseen_ids() const;
};

/// Per-class semantic vectors a[c], one row per catalog class.
struct ClassEmbeddingTable {
    std::size_t dimension = 0;
    Matrix vectors; // |C| x d_a
    bool normalized = false;

    const double* row(std::size_t class_id) const;
    /// Copy of a[c] as a 1 x d_a matrix. Throws LookupError on unknown id.
    Matrix embedding_of(std::size_t class_id) const;

    /// Unit-L2-normalized copy. Throws ValueError on a zero vector.
    ClassEmbeddingTable normalized_copy() const;
};

/// Reads word2vec text format: one record per line, `name v1 ... v_da`.
/// Every catalog name must appear exactly once; d_a is inferred from the
/// first line and enforced on the rest.
ClassEmbeddingTable load_embeddings(const std::string& path, const ClassCatalog& catalog, bool normalize);

void save_embeddings(const ClassEmbeddingTable& table, const ClassCatalog& catalog, const std::string& path);

/// Nearest class by cosine similarity, restricted to the given ids.
/// Ties break toward the smallest class id. Throws ValueError on a zero query.
std::size_t cosine_nearest(const ClassEmbeddingTable& table, const std::vector<double>& query,
                           const std::vector<std::size_t>& restrict_ids);

/// Deterministic embedding fixture with controlled pairwise similarities.
///
/// Non-background classes form pairs that share an archetype direction; the
/// second member of each pair tilts toward a detail direction carried by no
/// other class (cosine between pair members = pair_cos). Background and any
/// lone class lie in the archetype span. Requires d_a >= n_pairs * 2.
ClassEmbeddingTable make_fixture_embeddings(const ClassCatalog& catalog, std::size_t d_a,
                                            std::uint64_t seed, double pair_cos);

} // namespace zs3
