#include <contagion/errors.hpp>
#include <contagion/obligor_set.hpp>

namespace contagion {

ObligorSet::ObligorSet(int n) : n_(n) {
    if (n < 1 || n > max_obligors)
        throw DomainError("obligor count must lie in 1..128, got " + std::to_string(n));
}

ObligorSet ObligorSet::full(int n) { return from_bits(n, mask(n)); }

ObligorSet ObligorSet::of(int n, std::initializer_list<int> members) {
    ObligorSet s(n);
    for (int i : members)
        s = s.with(i);
    return s;
}

ObligorSet ObligorSet::of(int n, const std::vector<int>& members) {
    ObligorSet s(n);
    for (int i : members)
        s = s.with(i);
    return s;
}

ObligorSet ObligorSet::from_bits(int n, Bits bits) {
    ObligorSet s(n);
    if ((bits & ~mask(n)) != 0)
        throw ContractViolation("bitmask sets obligors beyond N = " + std::to_string(n));
    s.bits_ = bits;
    return s;
}

void ObligorSet::check_index(int i) const {
    if (i < 1 || i > n_)
        throw IndexError("obligor index " + std::to_string(i) + " outside 1.." + std::to_string(n_));
}

bool ObligorSet::contains(int i) const {
    check_index(i);
    return ((bits_ >> (i - 1)) & 1) != 0;
}

ObligorSet ObligorSet::with(int i) const {
    check_index(i);
    ObligorSet s = *this;
    s.bits_ |= Bits{1} << (i - 1);
    return s;
}

ObligorSet ObligorSet::without(int i) const {
    check_index(i);
    ObligorSet s = *this;
    s.bits_ &= ~(Bits{1} << (i - 1));
    return s;
}

std::vector<int> ObligorSet::members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for_each([&](int i) { out.push_back(i); });
    return out;
}

std::string ObligorSet::to_string() const {
    std::string s = "{";
    bool first = true;
    for_each([&](int i) {
        if (!first)
            s += ',';
        s += std::to_string(i);
        first = false;
    });
    return s + "}";
}

} // namespace contagion
