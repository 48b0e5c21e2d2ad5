#include "diiq/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace diiq {

namespace {
bool is_pow2(std::uint32_t x) { return x != 0 && (x & (x - 1)) == 0; }
}

SumTree::SumTree(std::uint32_t capacity) : capacity_(capacity) {
    if (!is_pow2(capacity)) throw std::invalid_argument("sum-tree capacity must be a power of two");
    nodes_.assign(static_cast<size_t>(capacity) * 2, 0.0);
}

void SumTree::set(std::uint32_t leaf, double value) {
    if (leaf >= capacity_) throw std::out_of_range("sum-tree leaf out of range");
    std::uint32_t i = capacity_ + leaf;
    nodes_[i] = value;
    for (i >>= 1; i >= 1; i >>= 1) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
}

double SumTree::get(std::uint32_t leaf) const {
    if (leaf >= capacity_) throw std::out_of_range("sum-tree leaf out of range");
    return nodes_[capacity_ + leaf];
}

std::uint32_t SumTree::find_prefix(double target) const {
    std::uint32_t i = 1;
    while (i < capacity_) {
        double left = nodes_[2 * i];
        if (target < left) {
            i = 2 * i;
        } else {
            target -= left;
            i = 2 * i + 1;
        }
    }
    return i - capacity_;
}

ReplayMemory::ReplayMemory(std::uint32_t capacity, float epsilon_priority)
    : capacity_(capacity), eps_prio_(epsilon_priority), tree_(capacity) {
    items_.resize(capacity);
    raw_priority_.assign(capacity, 0.0);
}

std::optional<AugmentedExperience> ReplayMemory::push(AugmentedExperience exp) {
    std::optional<AugmentedExperience> evicted;
    if (size_ == capacity_) evicted = std::move(items_[write_]);
    items_[write_] = std::move(exp);
    double p = size_ == 0 ? 1.0 : max_raw_priority_;
    // recompute running max lazily: new items always get the current max, so
    // the max only changes through update_priorities
    raw_priority_[write_] = p;
    if (current_alpha_ >= 0.0f)
        tree_.set(write_, std::pow(p, static_cast<double>(current_alpha_)));
    else
        tree_.set(write_, p);
    max_raw_priority_ = std::max(max_raw_priority_, p);
    write_ = (write_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
    return evicted;
}

void ReplayMemory::apply_alpha(float alpha) {
    if (alpha == current_alpha_) return;
    for (std::uint32_t i = 0; i < capacity_; ++i)
        tree_.set(i, i < size_ || raw_priority_[i] > 0.0
                         ? std::pow(raw_priority_[i], static_cast<double>(alpha))
                         : 0.0);
    // unoccupied slots have raw 0; pow(0, a) = 0 for a > 0
    current_alpha_ = alpha;
}

std::vector<SampledExperience> ReplayMemory::sample(std::uint32_t batch, float alpha, float beta,
                                                    Rng& rng) {
    if (batch > size_) throw std::invalid_argument("replay sample: batch larger than memory");
    if (batch == 0) throw std::invalid_argument("replay sample: empty batch");
    apply_alpha(alpha);
    double total = tree_.total();
    if (!(total > 0.0)) throw std::runtime_error("replay sample: zero total priority");

    std::vector<SampledExperience> out(batch);
    double seg = total / static_cast<double>(batch);
    double max_w = 0.0;
    std::vector<double> probs(batch);
    for (std::uint32_t j = 0; j < batch; ++j) {
        double target = (static_cast<double>(j) + uniform01(rng)) * seg;
        std::uint32_t leaf = tree_.find_prefix(target);
        if (leaf >= size_) leaf = size_ - 1;  // float edge at the very top of the range
        out[j].index = leaf;
        out[j].exp = &items_[leaf];
        probs[j] = tree_.get(leaf) / total;
    }
    for (std::uint32_t j = 0; j < batch; ++j) {
        double w = std::pow(static_cast<double>(size_) * probs[j], -static_cast<double>(beta));
        out[j].is_weight = static_cast<float>(w);
        max_w = std::max(max_w, w);
    }
    for (auto& s : out) s.is_weight = static_cast<float>(s.is_weight / max_w);
    return out;
}

void ReplayMemory::update_priorities(const std::vector<std::uint32_t>& indices,
                                     const std::vector<float>& td_errors) {
    if (indices.size() != td_errors.size())
        throw std::invalid_argument("update_priorities: size mismatch");
    for (size_t i = 0; i < indices.size(); ++i) {
        std::uint32_t idx = indices[i];
        if (idx >= size_) throw std::out_of_range("update_priorities: index out of range");
        double p = std::abs(static_cast<double>(td_errors[i])) + eps_prio_;
        raw_priority_[idx] = p;
        max_raw_priority_ = std::max(max_raw_priority_, p);
        if (current_alpha_ >= 0.0f)
            tree_.set(idx, std::pow(p, static_cast<double>(current_alpha_)));
        else
            tree_.set(idx, p);
    }
}

std::vector<std::uint32_t> ReplayMemory::insertion_order() const {
    std::vector<std::uint32_t> order;
    order.reserve(size_);
    if (size_ < capacity_) {
        for (std::uint32_t i = 0; i < size_; ++i) order.push_back(i);
    } else {
        for (std::uint32_t i = 0; i < capacity_; ++i) order.push_back((write_ + i) % capacity_);
    }
    return order;
}

float linear_schedule(float start, float end, std::int64_t horizon, std::int64_t step) {
    if (horizon <= 0 || step >= horizon) return end;
    if (step <= 0) return start;
    double f = static_cast<double>(step) / static_cast<double>(horizon);
    return static_cast<float>(start + (end - start) * f);
}

}  // namespace diiq
