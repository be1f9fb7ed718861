#include "handwash/split.hpp"

#include <algorithm>
#include <cmath>

#include "handwash/errors.hpp"
#include "handwash/rng.hpp"

namespace handwash {

std::size_t val_count_for_class(std::size_t class_count, double val_fraction) {
    const double raw = static_cast<double>(class_count) * val_fraction;
    auto rounded = static_cast<std::size_t>(std::floor(raw + 0.5));
    rounded = std::max<std::size_t>(rounded, 1);
    rounded = std::min(rounded, class_count - 1);
    return rounded;
}

DatasetManifest make_split(const DatasetManifest& manifest, double val_fraction,
                           std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("val_fraction must lie in (0,1)");

    const auto counts = manifest.class_counts();
    for (int c = 0; c < manifest.registry().size(); ++c) {
        if (counts[static_cast<std::size_t>(c)] < 2)
            throw SplitError("class " + manifest.registry().at(c).name +
                             " has fewer than 2 samples");
    }

    std::vector<std::vector<std::size_t>> per_class(counts.size());
    for (std::size_t i = 0; i < manifest.size(); ++i)
        per_class[static_cast<std::size_t>(manifest.samples()[i].label_id)].push_back(i);

    std::vector<Split> splits(manifest.size(), Split::train);
    Rng rng(seed);
    for (auto& members : per_class) {
        rng.shuffle(members);
        const std::size_t n_val = val_count_for_class(members.size(), val_fraction);
        for (std::size_t k = 0; k < n_val; ++k) splits[members[k]] = Split::val;
    }

    return DatasetManifest(manifest.registry(), manifest.samples(), std::move(splits));
}

}  // namespace handwash
