#include "lexforge/analyzer.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"

namespace lexforge::analyzer {

namespace {

constexpr std::uint32_t kDictionaryMagic = 0xef718f77u;
constexpr std::size_t kUcs2Size = 0xFFFF;

/// Read-only memory mapping of a whole file.
class MappedFile {
public:
    explicit MappedFile(const std::filesystem::path& path) {
        const int fd = ::open(path.c_str(), O_RDONLY);
        if (fd < 0) throw IoError("cannot open " + path.string());
        struct stat st {};
        if (::fstat(fd, &st) != 0) {
            ::close(fd);
            throw IoError("cannot stat " + path.string());
        }
        size_ = static_cast<std::size_t>(st.st_size);
        if (size_ > 0) {
            void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd, 0);
            if (p == MAP_FAILED) {
                ::close(fd);
                throw IoError("cannot map " + path.string());
            }
            data_ = static_cast<const char*>(p);
        }
        ::close(fd);
    }
    MappedFile(const MappedFile&) = delete;
    MappedFile& operator=(const MappedFile&) = delete;
    ~MappedFile() {
        if (data_) ::munmap(const_cast<char*>(data_), size_);
    }

    std::string_view view() const noexcept { return {data_, size_}; }

private:
    const char* data_ = nullptr;
    std::size_t size_ = 0;
};

template <typename T>
T read_le(std::string_view bytes, std::size_t offset) {
    if (offset + sizeof(T) > bytes.size()) throw ParseError("truncated binary dictionary data");
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

/// MeCab's UTF-8 to UCS-2 decoding, including its treatment of 4-byte sequences.
std::uint32_t utf8_to_ucs2(std::string_view text, std::size_t pos, std::size_t& mblen) {
    const auto len = text.size() - pos;
    const auto b0 = static_cast<unsigned char>(text[pos]);
    auto b = [&](std::size_t k) { return static_cast<unsigned char>(text[pos + k]); };
    if (b0 < 0x80) {
        mblen = 1;
        return b0;
    } else if (len >= 2 && (b0 & 0xE0) == 0xC0) {
        mblen = 2;
        return ((b0 & 0x1F) << 6) | (b(1) & 0x3F);
    } else if (len >= 3 && (b0 & 0xF0) == 0xE0) {
        mblen = 3;
        return ((b0 & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
    } else if (len >= 4 && (b0 & 0xF8) == 0xF0) {
        mblen = 4;
        return 0;
    }
    mblen = 1;
    return 0;
}

CharInfo decode_char_info(std::uint32_t v) {
    CharInfo c;
    c.type = v & 0x3FFFFu;
    c.default_type = static_cast<std::uint8_t>((v >> 18) & 0xFFu);
    c.length = static_cast<std::uint8_t>((v >> 26) & 0xFu);
    c.group = ((v >> 30) & 1u) != 0;
    c.invoke = ((v >> 31) & 1u) != 0;
    return c;
}

std::string hex4(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%04X", v);
    return buf;
}

std::vector<std::string_view> split_view(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto p = s.find(sep, start);
        out.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const auto start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

long parse_long(std::string_view s, std::string_view what) {
    try {
        std::size_t used = 0;
        const std::string str(s);
        const long v = std::stol(str, &used, 0);
        if (used != str.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad integer '" + std::string(s) + "' in " + std::string(what));
    }
}

// --- double array (MeCab's darts) -------------------------------------------

struct DartsUnit {
    std::int32_t base;
    std::uint32_t check;
};

class DoubleArray {
public:
    DoubleArray() = default;
    explicit DoubleArray(std::string_view bytes) : units_(bytes) {}

    std::size_t size() const noexcept { return units_.size() / sizeof(DartsUnit); }

    DartsUnit unit(std::size_t i) const {
        if (i >= size()) return {0, std::numeric_limits<std::uint32_t>::max()};
        DartsUnit u;
        std::memcpy(&u, units_.data() + i * sizeof(DartsUnit), sizeof u);
        return u;
    }

    /// Calls f(value, length) for each key that is a prefix of `key`, shortest first.
    template <typename F>
    void common_prefix_search(std::string_view key, F&& f) const {
        std::int64_t b = unit(0).base;
        for (std::size_t i = 0; i < key.size(); ++i) {
            const auto u = unit(static_cast<std::size_t>(b));
            if (static_cast<std::uint32_t>(b) == u.check && u.base < 0) f(-u.base - 1, i);
            const auto p = static_cast<std::size_t>(b + static_cast<unsigned char>(key[i]) + 1);
            const auto next = unit(p);
            if (static_cast<std::uint32_t>(b) != next.check) return;
            b = next.base;
        }
        const auto u = unit(static_cast<std::size_t>(b));
        if (static_cast<std::uint32_t>(b) == u.check && u.base < 0) f(-u.base - 1, key.size());
    }

    std::int64_t exact_match(std::string_view key) const {
        std::int64_t b = unit(0).base;
        for (const char ch : key) {
            const auto p = static_cast<std::size_t>(b + static_cast<unsigned char>(ch) + 1);
            const auto next = unit(p);
            if (static_cast<std::uint32_t>(b) != next.check) return -1;
            b = next.base;
        }
        const auto u = unit(static_cast<std::size_t>(b));
        if (static_cast<std::uint32_t>(b) == u.check && u.base < 0) return -u.base - 1;
        return -1;
    }

private:
    std::string_view units_;
};

/// One compiled MeCab dictionary file (sys.dic or unk.dic).
class CompiledDic {
public:
    explicit CompiledDic(const std::filesystem::path& path) : file_(path) {
        const auto bytes = file_.view();
        if (bytes.size() < 72) throw ParseError(path.string() + ": not a MeCab dictionary");
        const auto magic = read_le<std::uint32_t>(bytes, 0);
        if ((magic ^ kDictionaryMagic) != bytes.size())
            throw ParseError(path.string() + ": dictionary magic/size mismatch");
        const auto dsize = read_le<std::uint32_t>(bytes, 24);
        const auto tsize = read_le<std::uint32_t>(bytes, 28);
        const auto fsize = read_le<std::uint32_t>(bytes, 32);
        const std::size_t header = 72;
        if (header + std::size_t{dsize} + tsize + fsize > bytes.size())
            throw ParseError(path.string() + ": truncated dictionary");
        da_ = DoubleArray(bytes.substr(header, dsize));
        tokens_ = bytes.substr(header + dsize, tsize);
        features_ = bytes.substr(header + dsize + tsize, fsize);
    }

    const DoubleArray& da() const noexcept { return da_; }

    /// Token records for a double-array value: (value >> 8) is the first index, (value & 0xff) the count.
    void tokens(std::int64_t value, std::vector<Entry>& out) const {
        const auto first = static_cast<std::size_t>(value >> 8);
        const auto count = static_cast<std::size_t>(value & 0xFF);
        for (std::size_t j = 0; j < count; ++j) out.push_back(token(first + j));
    }

    Entry token(std::size_t index) const {
        const std::size_t off = index * 16;
        Entry e;
        e.left_id = read_le<std::uint16_t>(tokens_, off);
        e.right_id = read_le<std::uint16_t>(tokens_, off + 2);
        e.cost = read_le<std::int16_t>(tokens_, off + 6);
        const auto feature_off = read_le<std::uint32_t>(tokens_, off + 8);
        if (feature_off >= features_.size()) throw ParseError("dictionary feature offset out of range");
        const char* f = features_.data() + feature_off;
        e.feature = std::string_view(f, ::strnlen(f, features_.size() - feature_off));
        return e;
    }

private:
    MappedFile file_;
    DoubleArray da_;
    std::string_view tokens_;
    std::string_view features_;
};

class MecabDictionary final : public Dictionary {
public:
    explicit MecabDictionary(const std::filesystem::path& dicdir)
        : dicdir_(dicdir), sys_(dicdir / "sys.dic"), unk_(dicdir / "unk.dic"), matrix_(dicdir / "matrix.bin") {
        chars_ = CharProperty::from_binary(io::read_file(dicdir / "char.bin"));
        const auto m = matrix_.view();
        lsize_ = read_le<std::uint16_t>(m, 0);
        rsize_ = read_le<std::uint16_t>(m, 2);
        if (m.size() != 4 + std::size_t{lsize_} * rsize_ * 2)
            throw ParseError((dicdir / "matrix.bin").string() + ": size does not match its header");
        costs_ = m.substr(4);
        unknown_.resize(chars_.category_count());
        for (std::size_t c = 0; c < chars_.category_count(); ++c) {
            const auto v = unk_.da().exact_match(chars_.category_name(c));
            if (v < 0) throw ParseError("unk.dic has no entry for character category " + chars_.category_name(c));
            unk_.tokens(v, unknown_[c]);
        }
    }

    void prefix_matches(std::string_view text, std::vector<PrefixMatch>& out) const override {
        std::vector<Entry> scratch;
        sys_.da().common_prefix_search(text, [&](std::int64_t value, std::size_t length) {
            scratch.clear();
            sys_.tokens(value, scratch);
            for (const auto& e : scratch) out.push_back({length, e});
        });
    }

    std::span<const Entry> unknown_entries(std::size_t category) const override { return unknown_.at(category); }
    const CharProperty& chars() const override { return chars_; }

    int connection_cost(std::uint16_t right_id, std::uint16_t left_id) const override {
        const std::size_t index = std::size_t{right_id} + std::size_t{lsize_} * left_id;
        std::int16_t v;
        std::memcpy(&v, costs_.data() + index * 2, 2);
        return v;
    }

    std::string description() const override { return "mecab:" + dicdir_.string(); }

private:
    std::filesystem::path dicdir_;
    CompiledDic sys_;
    CompiledDic unk_;
    MappedFile matrix_;
    std::string_view costs_;
    std::uint16_t lsize_ = 0;
    std::uint16_t rsize_ = 0;
    CharProperty chars_;
    std::vector<std::vector<Entry>> unknown_;
};

// --- text bundle ------------------------------------------------------------

class BundleDictionary final : public Dictionary {
public:
    explicit BundleDictionary(const std::filesystem::path& dir) : dir_(dir) {
        chars_ = CharProperty::from_text(io::read_file(dir / "char.def"));
        load_words(io::read_file(dir / "dict.tsv"));
        load_unknown(io::read_file(dir / "unk.tsv"));
        load_matrix(io::read_file(dir / "matrix.tsv"));
    }

    void prefix_matches(std::string_view text, std::vector<PrefixMatch>& out) const override {
        const auto limit = std::min(text.size(), max_surface_);
        for (std::size_t len = 1; len <= limit; ++len) {
            const auto it = words_.find(text.substr(0, len));
            if (it == words_.end()) continue;
            for (const auto& e : it->second) out.push_back({len, e});
        }
    }

    std::span<const Entry> unknown_entries(std::size_t category) const override { return unknown_.at(category); }
    const CharProperty& chars() const override { return chars_; }

    int connection_cost(std::uint16_t right_id, std::uint16_t left_id) const override {
        const auto r = right_id < right_row_.size() ? right_row_[right_id] : -1;
        const auto l = left_id < left_col_.size() ? left_col_[left_id] : -1;
        if (r < 0 || l < 0)
            throw SegmentationError("bundle " + dir_.string() + " has no connection cost for (" +
                                    std::to_string(right_id) + ", " + std::to_string(left_id) + ")");
        return costs_[static_cast<std::size_t>(r) * left_ids_ + static_cast<std::size_t>(l)];
    }

    std::string description() const override { return "bundle:" + dir_.string(); }

private:
    Entry parse_entry(std::span<const std::string_view> cols, std::string_view what) {
        Entry e;
        e.left_id = static_cast<std::uint16_t>(parse_long(cols[1], what));
        e.right_id = static_cast<std::uint16_t>(parse_long(cols[2], what));
        e.cost = static_cast<std::int16_t>(parse_long(cols[3], what));
        e.feature = storage_.emplace_back(cols[4]);
        return e;
    }

    void load_words(std::string_view text) {
        std::size_t lineno = 0;
        for (const auto line : split_view(text, '\n')) {
            ++lineno;
            if (line.empty() || line.front() == '#') continue;
            const auto cols = split_view(line, '\t');
            if (cols.size() != 5) throw ParseError("dict.tsv: expected 5 columns", lineno, 1);
            const auto surface = std::string(cols[0]);
            words_[surface].push_back(parse_entry(cols, "dict.tsv"));
            max_surface_ = std::max(max_surface_, surface.size());
        }
    }

    void load_unknown(std::string_view text) {
        unknown_.resize(chars_.category_count());
        std::size_t lineno = 0;
        for (const auto line : split_view(text, '\n')) {
            ++lineno;
            if (line.empty() || line.front() == '#') continue;
            const auto cols = split_view(line, '\t');
            if (cols.size() != 5) throw ParseError("unk.tsv: expected 5 columns", lineno, 1);
            std::size_t cat = 0;
            while (cat < chars_.category_count() && chars_.category_name(cat) != cols[0]) ++cat;
            if (cat == chars_.category_count())
                throw ParseError("unk.tsv: unknown category " + std::string(cols[0]), lineno, 1);
            unknown_[cat].push_back(parse_entry(cols, "unk.tsv"));
        }
    }

    void load_matrix(std::string_view text) {
        const auto lines = split_view(text, '\n');
        std::vector<std::string_view> rows;
        std::vector<long> rights, lefts;
        for (const auto line : lines) {
            if (line.empty() || line.front() == '#') continue;
            if (line.starts_with("right_ids\t")) {
                for (const auto v : split_ws(line.substr(10))) rights.push_back(parse_long(v, "matrix.tsv"));
            } else if (line.starts_with("left_ids\t")) {
                for (const auto v : split_ws(line.substr(9))) lefts.push_back(parse_long(v, "matrix.tsv"));
            } else {
                rows.push_back(line);
            }
        }
        if (rows.size() != rights.size()) throw ParseError("matrix.tsv: row count does not match right_ids");
        auto index_of = [](const std::vector<long>& ids) {
            std::vector<int> idx(ids.empty() ? 0 : static_cast<std::size_t>(*std::max_element(ids.begin(), ids.end())) + 1, -1);
            for (std::size_t i = 0; i < ids.size(); ++i) idx[static_cast<std::size_t>(ids[i])] = static_cast<int>(i);
            return idx;
        };
        right_row_ = index_of(rights);
        left_col_ = index_of(lefts);
        left_ids_ = lefts.size();
        costs_.reserve(rows.size() * left_ids_);
        for (const auto row : rows) {
            const auto vals = split_ws(row);
            if (vals.size() != left_ids_) throw ParseError("matrix.tsv: row width does not match left_ids");
            for (const auto v : vals) costs_.push_back(static_cast<std::int16_t>(parse_long(v, "matrix.tsv")));
        }
    }

    std::filesystem::path dir_;
    CharProperty chars_;
    std::deque<std::string> storage_;
    std::map<std::string, std::vector<Entry>, std::less<>> words_;
    std::size_t max_surface_ = 0;
    std::vector<std::vector<Entry>> unknown_;
    std::vector<int> right_row_;
    std::vector<int> left_col_;
    std::size_t left_ids_ = 0;
    std::vector<std::int16_t> costs_;
};

// --- lattice ------------------------------------------------------------------

struct Node {
    std::size_t begin = 0;    // surface start (after skipped whitespace)
    std::size_t length = 0;   // surface bytes
    std::size_t rlength = 0;  // bytes consumed including leading whitespace
    Entry entry;
    bool unknown = false;
    std::int64_t cost = 0;
    std::size_t prev = 0;
};

CharInfo seek_to_other_type(const CharProperty& chars, std::string_view text, std::size_t& p, CharInfo c,
                            std::size_t& mblen, std::size_t& clen) {
    CharInfo fail{};
    clen = 0;
    while (p < text.size()) {
        fail = chars.info_at(text, p, mblen);
        if (!c.is_kind_of(fail)) break;
        p += mblen;
        ++clen;
        c = fail;
    }
    return fail;
}

/// Candidate nodes starting at `pos`, in the order MeCab links them.
void lookup(const Dictionary& dict, std::string_view text, std::size_t pos, std::size_t max_grouping,
            std::vector<Node>& out, std::vector<PrefixMatch>& scratch) {
    const auto& chars = dict.chars();
    const CharInfo space = chars.info(0x20);
    std::size_t begin2 = pos, mblen = 0, clen = 0;
    const CharInfo cinfo = seek_to_other_type(chars, text, begin2, space, mblen, clen);
    if (begin2 >= text.size()) return;  // only whitespace remains

    scratch.clear();
    dict.prefix_matches(text.substr(begin2), scratch);
    for (const auto& m : scratch) {
        Node n;
        n.begin = begin2;
        n.length = m.length;
        n.rlength = begin2 - pos + m.length;
        n.entry = m.entry;
        out.push_back(n);
    }
    if (!out.empty() && !cinfo.invoke) return;

    auto add_unknown = [&](std::size_t end3) {
        for (const auto& e : dict.unknown_entries(cinfo.default_type)) {
            Node n;
            n.begin = begin2;
            n.length = end3 - begin2;
            n.rlength = end3 - pos;
            n.entry = e;
            n.unknown = true;
            out.push_back(n);
        }
    };

    std::size_t begin3 = begin2 + mblen;
    std::size_t group_begin3 = std::string_view::npos;
    if (cinfo.group) {
        std::size_t p = begin3, mb = 0, cl = 0;
        seek_to_other_type(chars, text, p, cinfo, mb, cl);
        if (cl <= max_grouping) add_unknown(p);
        group_begin3 = p;
    }
    for (std::size_t i = 1; i <= cinfo.length; ++i) {
        if (begin3 > text.size()) break;
        if (begin3 != group_begin3) add_unknown(begin3);
        if (begin3 == text.size()) break;
        std::size_t mb = 0;
        if (!cinfo.is_kind_of(chars.info_at(text, begin3, mb))) break;
        begin3 += mb;
    }
    if (out.empty()) add_unknown(std::min(begin3, text.size()));
}

}  // namespace

// --- CharProperty -------------------------------------------------------------

CharProperty CharProperty::from_binary(std::string_view bytes) {
    const auto csize = read_le<std::uint32_t>(bytes, 0);
    const std::size_t expected = 4 + std::size_t{csize} * 32 + kUcs2Size * 4;
    if (bytes.size() != expected) throw ParseError("char.bin: size does not match its header");
    CharProperty cp;
    for (std::uint32_t i = 0; i < csize; ++i) {
        const char* name = bytes.data() + 4 + i * 32;
        cp.names_.emplace_back(name, ::strnlen(name, 32));
    }
    cp.map_.resize(kUcs2Size);
    const std::size_t base = 4 + std::size_t{csize} * 32;
    for (std::size_t u = 0; u < kUcs2Size; ++u) cp.map_[u] = decode_char_info(read_le<std::uint32_t>(bytes, base + u * 4));
    return cp;
}

CharProperty CharProperty::from_text(std::string_view text) {
    struct Category {
        bool invoke;
        bool group;
        std::uint8_t length;
    };
    CharProperty cp;
    std::vector<Category> cats;
    std::vector<std::pair<std::string_view, std::vector<std::string_view>>> ranges;
    std::size_t lineno = 0;
    for (auto line : split_view(text, '\n')) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto cols = split_ws(line);
        if (cols.empty()) continue;
        if (cols[0].starts_with("0x")) {
            if (cols.size() < 2) throw ParseError("char.def: range line without category", lineno, 1);
            ranges.emplace_back(cols[0], std::vector<std::string_view>(cols.begin() + 1, cols.end()));
        } else {
            if (cols.size() != 4) throw ParseError("char.def: category line needs NAME INVOKE GROUP LENGTH", lineno, 1);
            cp.names_.emplace_back(cols[0]);
            cats.push_back({parse_long(cols[1], "char.def") != 0, parse_long(cols[2], "char.def") != 0,
                            static_cast<std::uint8_t>(parse_long(cols[3], "char.def"))});
        }
    }
    auto index_of = [&](std::string_view name) -> std::size_t {
        for (std::size_t i = 0; i < cp.names_.size(); ++i)
            if (cp.names_[i] == name) return i;
        throw ParseError("char.def: undefined category " + std::string(name));
    };
    auto make = [&](const std::vector<std::string_view>& names) {
        CharInfo c;
        for (const auto n : names) c.type |= 1u << index_of(n);
        const auto first = index_of(names.front());
        c.default_type = static_cast<std::uint8_t>(first);
        c.invoke = cats[first].invoke;
        c.group = cats[first].group;
        c.length = cats[first].length;
        return c;
    };
    cp.map_.assign(kUcs2Size, make({"DEFAULT"}));
    for (const auto& [range, names] : ranges) {
        const auto dots = range.find("..");
        const auto lo = static_cast<std::size_t>(parse_long(range.substr(0, dots), "char.def"));
        const auto hi = dots == std::string_view::npos ? lo
                                                       : static_cast<std::size_t>(parse_long(range.substr(dots + 2), "char.def"));
        const auto info = make(names);
        for (std::size_t u = lo; u <= hi && u < kUcs2Size; ++u) cp.map_[u] = info;
    }
    return cp;
}

std::string CharProperty::to_text() const {
    std::ostringstream out;
    out << "# NAME INVOKE GROUP LENGTH\n";
    for (std::size_t i = 0; i < names_.size(); ++i) {
        const auto it = std::find_if(map_.begin(), map_.end(), [&](const CharInfo& c) { return c.default_type == i; });
        const CharInfo c = it != map_.end() ? *it : CharInfo{};
        out << names_[i] << ' ' << int(c.invoke) << ' ' << int(c.group) << ' ' << int(c.length) << '\n';
    }
    out << "# code point ranges: first category is the default type\n";
    std::size_t default_index = 0;
    while (default_index < names_.size() && names_[default_index] != "DEFAULT") ++default_index;
    std::size_t u = 0;
    while (u < map_.size()) {
        std::size_t end = u;
        while (end + 1 < map_.size() && map_[end + 1] == map_[u]) ++end;
        const auto& c = map_[u];
        if (!(c.default_type == default_index && c.type == (1u << default_index))) {
            out << hex4(static_cast<std::uint32_t>(u));
            if (end > u) out << ".." << hex4(static_cast<std::uint32_t>(end));
            out << ' ' << names_[c.default_type];
            for (std::size_t b = 0; b < names_.size(); ++b)
                if (b != c.default_type && (c.type & (1u << b))) out << ' ' << names_[b];
            out << '\n';
        }
        u = end + 1;
    }
    return out.str();
}

CharInfo CharProperty::info_at(std::string_view text, std::size_t pos, std::size_t& mblen) const {
    return info(utf8_to_ucs2(text, pos, mblen));
}

CharInfo CharProperty::info(std::uint32_t ucs2) const { return ucs2 < map_.size() ? map_[ucs2] : map_[0]; }

// --- public entry points -------------------------------------------------------

std::shared_ptr<const Dictionary> open_mecab_dictionary(const std::filesystem::path& dicdir) {
    return std::make_shared<MecabDictionary>(dicdir);
}

std::shared_ptr<const Dictionary> open_bundle(const std::filesystem::path& dir) {
    return std::make_shared<BundleDictionary>(dir);
}

std::vector<std::string> split_feature(std::string_view feature) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < feature.size(); ++i) {
        const char c = feature[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < feature.size() && feature[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

Analyzer::Analyzer(std::shared_ptr<const Dictionary> dictionary, AnalyzerOptions options)
    : dictionary_(std::move(dictionary)), options_(options) {
    if (!dictionary_) throw Error("Analyzer requires a dictionary");
}

std::vector<Morph> Analyzer::parse(std::string_view text) const {
    const auto& dict = *dictionary_;
    const std::size_t len = text.size();
    std::vector<Node> nodes;
    nodes.reserve(len * 4 + 2);
    nodes.push_back(Node{});  // BOS
    std::vector<std::vector<std::size_t>> end_nodes(len + 1);
    end_nodes[0].push_back(0);

    std::vector<Node> candidates;
    std::vector<PrefixMatch> scratch;

    // Best predecessor among nodes ending at `pos`; ties keep the most recently linked node.
    auto connect = [&](std::size_t pos, Node& right) {
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        std::size_t best_node = 0;
        bool found = false;
        const auto& lefts = end_nodes[pos];
        for (auto it = lefts.rbegin(); it != lefts.rend(); ++it) {
            const Node& left = nodes[*it];
            const std::int64_t cost =
                left.cost + dict.connection_cost(left.entry.right_id, right.entry.left_id) + right.entry.cost;
            if (cost < best) {
                best = cost;
                best_node = *it;
                found = true;
            }
        }
        if (!found) throw SegmentationError("lattice has no path");
        right.cost = best;
        right.prev = best_node;
    };

    for (std::size_t pos = 0; pos < len; ++pos) {
        if (end_nodes[pos].empty()) continue;
        candidates.clear();
        lookup(dict, text, pos, options_.max_grouping_size, candidates, scratch);
        for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
            Node n = *it;
            connect(pos, n);
            const auto end = pos + n.rlength;
            if (end > len) continue;
            nodes.push_back(n);
            end_nodes[end].push_back(nodes.size() - 1);
        }
    }

    Node eos;
    std::size_t last = len;
    while (end_nodes[last].empty()) {
        if (last == 0) throw SegmentationError("lattice has no path");
        --last;
    }
    connect(last, eos);

    std::vector<Morph> out;
    for (std::size_t i = eos.prev; i != 0; i = nodes[i].prev) {
        const Node& n = nodes[i];
        out.push_back({text.substr(n.begin, n.length), n.entry, n.unknown});
    }
    std::reverse(out.begin(), out.end());
    return out;
}

// --- bundle extraction -------------------------------------------------------------

void write_bundle(const Dictionary& source, std::span<const std::string> texts, const std::filesystem::path& dir) {
    // entries per surface, in dictionary order
    std::map<std::string, std::vector<Entry>> words;
    std::vector<PrefixMatch> scratch;
    const auto& chars = source.chars();
    const CharInfo space = chars.info(0x20);

    for (const auto& text : texts) {
        std::string_view t = text;
        for (std::size_t pos = 0; pos < t.size();) {
            std::size_t begin2 = pos, mblen = 0, clen = 0;
            seek_to_other_type(chars, t, begin2, space, mblen, clen);
            if (begin2 < t.size()) {
                scratch.clear();
                source.prefix_matches(t.substr(begin2), scratch);
                for (const auto& m : scratch) {
                    auto& list = words[std::string(t.substr(begin2, m.length))];
                    const bool seen = std::any_of(list.begin(), list.end(), [&](const Entry& e) {
                        return e.left_id == m.entry.left_id && e.right_id == m.entry.right_id &&
                               e.cost == m.entry.cost && e.feature == m.entry.feature;
                    });
                    if (!seen) list.push_back(m.entry);
                }
            }
            std::size_t step = 0;
            chars.info_at(t, pos, step);
            pos += std::max<std::size_t>(step, 1);
        }
    }

    std::set<std::uint16_t> right_ids{0}, left_ids{0};
    std::ostringstream dict_tsv, unk_tsv;
    dict_tsv << "# surface\tleft_id\tright_id\tcost\tfeature\n";
    for (const auto& [surface, list] : words) {
        for (const auto& e : list) {
            dict_tsv << surface << '\t' << e.left_id << '\t' << e.right_id << '\t' << e.cost << '\t' << e.feature << '\n';
            right_ids.insert(e.right_id);
            left_ids.insert(e.left_id);
        }
    }
    unk_tsv << "# category\tleft_id\tright_id\tcost\tfeature\n";
    for (std::size_t c = 0; c < chars.category_count(); ++c) {
        for (const auto& e : source.unknown_entries(c)) {
            unk_tsv << chars.category_name(c) << '\t' << e.left_id << '\t' << e.right_id << '\t' << e.cost << '\t'
                    << e.feature << '\n';
            right_ids.insert(e.right_id);
            left_ids.insert(e.left_id);
        }
    }

    std::ostringstream matrix;
    matrix << "# connection costs: one row per right_id, one column per left_id\n";
    matrix << "right_ids\t";
    for (const auto r : right_ids) matrix << r << ' ';
    matrix << "\nleft_ids\t";
    for (const auto l : left_ids) matrix << l << ' ';
    matrix << '\n';
    for (const auto r : right_ids) {
        bool first = true;
        for (const auto l : left_ids) {
            if (!first) matrix << ' ';
            matrix << source.connection_cost(r, l);
            first = false;
        }
        matrix << '\n';
    }

    const auto char_def = chars.to_text();
    if (!(CharProperty::from_text(char_def) == chars))
        throw Error("character categories do not survive the char.def round trip");

    io::write_file_atomic(dir / "dict.tsv", dict_tsv.str());
    io::write_file_atomic(dir / "unk.tsv", unk_tsv.str());
    io::write_file_atomic(dir / "matrix.tsv", matrix.str());
    io::write_file_atomic(dir / "char.def", char_def);
    io::write_file_atomic(dir / "SOURCE",
                          "Extracted by `lexforge lexicon-extract` from " + source.description() + "\n" +
                              "words: " + std::to_string(words.size()) + "\n");
}

}  // namespace lexforge::analyzer
