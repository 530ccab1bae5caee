#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "webdream/acctree.hpp"

namespace webdream {

enum class SiteKind { Shop, Wiki, Forum };

std::string_view site_kind_name(SiteKind k);
SiteKind site_kind_from_name(std::string_view name);

using PageId = int32_t;

constexpr PageId kHomePage = 0;
constexpr PageId kResultsPage = 1;

/// One element of a page template. Elements with `container != 0` are
/// rendered as children of that container element.
struct PageElement {
    NodeId id = 0;
    std::string role;
    std::string name;
    NodeId container = 0;
    std::optional<PageId> link_target;
    bool is_search_box = false;
    bool is_search_button = false;
};

struct Page {
    PageId id = 0;
    std::string url;
    std::string title;
    NodeId root_id = 0;
    std::vector<PageElement> elements;
    std::optional<PageId> parent;
    std::vector<PageId> children;
    /// Price / author / summary; empty for navigation pages.
    std::string attribute;
    bool is_item = false;
    /// Results list container on the search page.
    NodeId results_container = 0;
};

/// A procedurally generated website: home, search results, then a tree of
/// category pages whose leaves are item pages.
struct WebSite {
    uint64_t seed = 0;
    SiteKind kind = SiteKind::Shop;
    size_t n_pages = 0;
    size_t branching = 0;
    std::string host;
    std::string name;
    std::vector<Page> pages;
    /// Per item page: the id of its link on the search results page.
    std::vector<NodeId> result_link_ids;

    const Page& page(PageId id) const { return pages.at(static_cast<size_t>(id)); }
    std::vector<PageId> item_pages() const;
    /// Titles of ancestor categories below home, outermost first.
    std::vector<std::string> breadcrumb(PageId id) const;
    /// Closed content vocabulary: item titles, item attributes, "N/A".
    std::vector<std::string> content_vocab() const;
    /// Item pages whose titles share a word with the query, best match first.
    std::vector<PageId> search(const std::string& query) const;
    /// Pages reachable from home by clicking links or the search button.
    std::vector<size_t> click_distances() const;
};

/// Deterministic in all arguments. Throws InvalidArgument unless
/// n_pages >= 2 and branching >= 1.
WebSite generate_site(uint64_t seed, SiteKind kind, size_t n_pages, size_t branching);

}  // namespace webdream
