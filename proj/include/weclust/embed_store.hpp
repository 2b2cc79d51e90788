#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "weclust/corpus.hpp"
#include "weclust/csv.hpp"
#include "weclust/error.hpp"
#include "weclust/matrix.hpp"
#include "weclust/text.hpp"

namespace weclust {

/// One vector per word type, all of length dim(). Immutable once built;
/// concurrent reads are safe.
class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return words_.size(); }
    bool empty() const noexcept { return words_.empty(); }
    const std::vector<std::string>& words() const noexcept { return words_; }
    const std::string& word(std::size_t i) const { return words_[i]; }

    std::span<const float> vector(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

    std::optional<std::size_t> find(std::string_view word) const {
        auto it = index_.find(std::string(word));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    void add(std::string word, std::span<const float> v) {
        if (v.size() != dim_)
            throw DataError("dimension mismatch: expected " + std::to_string(dim_) + ", got " + std::to_string(v.size()));
        for (float x : v)
            if (!std::isfinite(x)) throw DataError("non-finite component in vector for '" + word + "'");
        if (!index_.emplace(word, words_.size()).second) throw DataError("duplicate word '" + word + "'");
        words_.push_back(std::move(word));
        values_.insert(values_.end(), v.begin(), v.end());
    }

    /// Vectors widened to double, in table order.
    Matrix to_matrix() const {
        Matrix m(size(), dim_);
        for (std::size_t i = 0; i < values_.size(); ++i) m.data()[i] = values_[i];
        return m;
    }

    friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
        return a.dim_ == b.dim_ && a.words_ == b.words_ && a.values_.size() == b.values_.size() &&
               std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0;
    }

private:
    std::size_t dim_;
    std::vector<std::string> words_;
    std::vector<float> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Occurrence {
    std::string word;
    std::vector<float> vector;
};

/// Mean of all occurrence vectors per word. Output is ordered by word, so it
/// does not depend on stream order beyond float rounding.
inline EmbeddingTable aggregate(std::span<const Occurrence> occurrences) {
    if (occurrences.empty()) throw DataError("empty occurrence stream");
    const std::size_t dim = occurrences.front().vector.size();
    if (dim == 0) throw DataError("dimension 0");
    std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
    for (const auto& occ : occurrences) {
        if (occ.vector.size() != dim)
            throw DataError("dimension mismatch: expected " + std::to_string(dim) + ", got " +
                            std::to_string(occ.vector.size()));
        auto& [sum, n] = sums[occ.word];
        if (sum.empty()) sum.assign(dim, 0.0);
        for (std::size_t j = 0; j < dim; ++j) sum[j] += occ.vector[j];
        ++n;
    }
    EmbeddingTable table(dim);
    std::vector<float> mean(dim);
    for (auto& [word, acc] : sums) {
        for (std::size_t j = 0; j < dim; ++j) mean[j] = static_cast<float>(acc.first[j] / static_cast<double>(acc.second));
        table.add(word, mean);
    }
    return table;
}

/// Keeps the words that are vocabulary terms, in table order.
inline EmbeddingTable filter(const EmbeddingTable& table, const Vocabulary& vocab) {
    EmbeddingTable out(table.dim());
    for (std::size_t i = 0; i < table.size(); ++i)
        if (vocab.contains(table.word(i))) out.add(table.word(i), table.vector(i));
    if (out.empty()) throw DataError("empty embedding table after filtration");
    return out;
}

// --- WEMB binary format ----------------------------------------------------------
//
//   "WEMB" | u32 version = 1 | u32 dim | u64 count
//   count × ( u16 byte length | UTF-8 word | dim × f32 )
//
// All integers and floats little-endian.

inline constexpr std::array<char, 4> kWembMagic = {'W', 'E', 'M', 'B'};
inline constexpr std::uint32_t kWembVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    std::array<char, sizeof(T)> bytes;
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) throw DataError("WEMB: truncated");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace detail

inline void write_wemb(const EmbeddingTable& table, std::ostream& out) {
    if (table.dim() == 0) throw DataError("WEMB: dim 0");
    out.write(kWembMagic.data(), kWembMagic.size());
    detail::put_le<std::uint32_t>(out, kWembVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim()));
    detail::put_le<std::uint64_t>(out, table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& w = table.word(i);
        if (w.size() > UINT16_MAX) throw DataError("WEMB: word longer than 65535 bytes");
        detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(w.size()));
        out.write(w.data(), static_cast<std::streamsize>(w.size()));
        for (float x : table.vector(i)) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
    }
    if (!out) throw DataError("WEMB: write failed");
}

inline EmbeddingTable read_wemb(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size())) throw DataError("WEMB: truncated");
    if (magic != kWembMagic) throw DataError("WEMB: bad magic");
    auto version = detail::get_le<std::uint32_t>(in);
    if (version != kWembVersion) throw DataError("WEMB: unsupported version " + std::to_string(version));
    auto dim = detail::get_le<std::uint32_t>(in);
    if (dim == 0) throw DataError("WEMB: dim 0");
    auto count = detail::get_le<std::uint64_t>(in);

    EmbeddingTable table(dim);
    std::vector<float> v(dim);
    std::string word;
    for (std::uint64_t i = 0; i < count; ++i) {
        auto len = detail::get_le<std::uint16_t>(in);
        word.assign(len, '\0');
        if (len && !in.read(word.data(), len)) throw DataError("WEMB: truncated");
        if (!text::is_valid_utf8(word)) throw DataError("WEMB: non-UTF-8 word at record " + std::to_string(i));
        for (auto& x : v) x = std::bit_cast<float>(detail::get_le<std::uint32_t>(in));
        table.add(word, v);
    }
    return table;
}

inline void write_wemb(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    write_wemb(table, out);
}

inline EmbeddingTable read_wemb(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    return read_wemb(in);
}

// --- TSV fallback: word<TAB>x1<TAB>...<TAB>xdim ----------------------------------

inline EmbeddingTable read_embedding_tsv(std::istream& in, const std::string& source = "<tsv>") {
    std::optional<EmbeddingTable> table;
    std::string line;
    std::size_t line_no = 0;
    std::vector<float> v;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_tabs(line);
        if (fields.size() < 2) throw DataError(source + ":" + std::to_string(line_no) + ": no vector components");
        if (!text::is_valid_utf8(fields[0])) throw DataError(source + ":" + std::to_string(line_no) + ": non-UTF-8 word");
        v.clear();
        for (std::size_t j = 1; j < fields.size(); ++j) {
            auto x = csv::parse_double(fields[j]);
            if (!x) throw DataError(source + ":" + std::to_string(line_no) + ": bad number '" + fields[j] + "'");
            v.push_back(static_cast<float>(*x));
        }
        if (!table) table.emplace(v.size());
        table->add(fields[0], v);
    }
    if (!table) throw DataError(source + ": empty embedding file");
    return std::move(*table);
}

inline void write_embedding_tsv(const EmbeddingTable& table, std::ostream& out) {
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.word(i);
        for (float x : table.vector(i)) out << '\t' << csv::format(static_cast<double>(x));
        out << '\n';
    }
}

/// .tsv and .txt paths use the text fallback; everything else must be WEMB.
inline EmbeddingTable read_embeddings(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".tsv" || ext == ".txt") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot read " + path.string());
        return read_embedding_tsv(in, path.string());
    }
    return read_wemb(path);
}

}  // namespace weclust
