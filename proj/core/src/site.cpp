#include "webdream/site.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

#include "webdream/common.hpp"

namespace webdream {

namespace {

struct Lexicon {
    std::vector<std::string> categories;
    std::vector<std::string> adjectives;
    std::vector<std::string> nouns;
    std::string attribute_label;
    std::string site_suffix;
};

const Lexicon& lexicon(SiteKind kind) {
    static const Lexicon shop{
        {"Electronics", "Garden", "Kitchen", "Toys", "Books", "Sports", "Office", "Music", "Outdoor", "Beauty",
         "Automotive", "Pets", "Tools", "Games", "Fashion", "Lighting", "Travel", "Crafts"},
        {"Blue", "Red", "Silver", "Compact", "Deluxe", "Classic", "Vintage", "Smart", "Wireless", "Portable",
         "Golden", "Quiet", "Rapid", "Sturdy", "Bright", "Mini", "Rustic", "Modern"},
        {"Laptop", "Kettle", "Lamp", "Chair", "Drone", "Backpack", "Camera", "Blender", "Guitar", "Watch",
         "Speaker", "Jacket", "Tent", "Mug", "Printer", "Keyboard", "Bicycle", "Scarf"},
        "Price",
        "Market"};
    static const Lexicon wiki{
        {"History", "Science", "Geography", "Art", "Biology", "Physics", "Literature", "Astronomy", "Chemistry",
         "Architecture", "Philosophy", "Medicine", "Economics", "Languages", "Mythology", "Geology"},
        {"Ancient", "Northern", "Lost", "Great", "Hidden", "Eastern", "Western", "Frozen", "Sacred", "Iron",
         "Silent", "Royal", "Southern", "Crimson", "Distant", "Old"},
        {"River", "Empire", "Theorem", "Comet", "Cathedral", "Glacier", "Painting", "Symphony", "Harbor", "Volcano",
         "Library", "Forest", "Bridge", "Dynasty", "Canal", "Observatory"},
        "Since",
        "Pedia"};
    static const Lexicon forum{
        {"General", "Help", "Announcements", "Offtopic", "Feedback", "Showcase", "Trading", "Events", "Hardware",
         "Software", "Gaming", "Cooking", "Travel", "Jobs", "Support", "Ideas"},
        {"Weekly", "Quick", "Urgent", "Random", "Beginner", "Advanced", "Friendly", "Strange", "Final", "Daily",
         "Honest", "Simple", "Epic", "Late", "Early", "Secret"},
        {"Question", "Update", "Idea", "Guide", "Issue", "Tip", "Review", "Story", "Poll", "Rant", "Request",
         "Report", "Recipe", "Puzzle", "Thread", "Challenge"},
        "Author",
        "Board"};
    switch (kind) {
        case SiteKind::Shop: return shop;
        case SiteKind::Wiki: return wiki;
        case SiteKind::Forum: return forum;
    }
    return shop;
}

const std::vector<std::string>& author_names() {
    static const std::vector<std::string> names = {
        "alice_k", "bob_m", "carol_t", "dmitri", "esme", "farid", "gwen88", "hiro", "ines_v", "jonas",
        "kemal", "lena_p", "marco", "nadia", "oskar", "priya", "quinn", "rosa_b", "sven", "tomoko"};
    return names;
}

std::string attribute_for(SiteKind kind, Rng& rng, std::set<std::string>& used) {
    for (;;) {
        std::string v;
        switch (kind) {
            case SiteKind::Shop: {
                const uint64_t cents = 500 + rng.below(49500);
                const uint64_t frac = cents % 100;
                v = "$" + std::to_string(cents / 100) + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
                break;
            }
            case SiteKind::Wiki: v = std::to_string(1200 + rng.below(820)); break;
            case SiteKind::Forum: {
                const auto& names = author_names();
                v = names[rng.below(names.size())];
                // Authors may repeat; prices and years may not.
                return v;
            }
        }
        if (used.insert(v).second) return v;
    }
}

}  // namespace

std::string_view site_kind_name(SiteKind k) {
    switch (k) {
        case SiteKind::Shop: return "shop";
        case SiteKind::Wiki: return "wiki";
        case SiteKind::Forum: return "forum";
    }
    return "?";
}

SiteKind site_kind_from_name(std::string_view name) {
    if (name == "shop") return SiteKind::Shop;
    if (name == "wiki") return SiteKind::Wiki;
    if (name == "forum") return SiteKind::Forum;
    throw InvalidArgument("unknown site kind '" + std::string(name) + "'");
}

std::vector<PageId> WebSite::item_pages() const {
    std::vector<PageId> out;
    for (const auto& p : pages) {
        if (p.is_item) out.push_back(p.id);
    }
    return out;
}

std::vector<std::string> WebSite::breadcrumb(PageId id) const {
    std::vector<std::string> out;
    std::optional<PageId> cur = page(id).parent;
    while (cur && *cur != kHomePage) {
        out.push_back(page(*cur).title);
        cur = page(*cur).parent;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<std::string> WebSite::content_vocab() const {
    std::vector<std::string> out;
    for (PageId id : item_pages()) out.push_back(page(id).title);
    std::set<std::string> seen;
    for (PageId id : item_pages()) {
        if (seen.insert(page(id).attribute).second) out.push_back(page(id).attribute);
    }
    out.push_back("N/A");
    return out;
}

std::vector<PageId> WebSite::search(const std::string& query) const {
    const auto q = word_tokens(query);
    std::vector<std::pair<size_t, PageId>> scored;
    for (PageId id : item_pages()) {
        size_t hits = 0;
        for (const auto& t : word_tokens(page(id).title)) hits += std::count(q.begin(), q.end(), t) > 0 ? 1 : 0;
        if (hits > 0) scored.emplace_back(hits, id);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<PageId> out;
    for (const auto& s : scored) out.push_back(s.second);
    return out;
}

std::vector<size_t> WebSite::click_distances() const {
    std::vector<size_t> dist(pages.size(), std::numeric_limits<size_t>::max());
    std::deque<PageId> queue{kHomePage};
    dist[kHomePage] = 0;
    while (!queue.empty()) {
        const PageId cur = queue.front();
        queue.pop_front();
        for (const auto& e : page(cur).elements) {
            std::optional<PageId> next = e.link_target;
            if (e.is_search_button) next = kResultsPage;
            if (next && dist[static_cast<size_t>(*next)] == std::numeric_limits<size_t>::max()) {
                dist[static_cast<size_t>(*next)] = dist[static_cast<size_t>(cur)] + 1;
                queue.push_back(*next);
            }
        }
    }
    return dist;
}

WebSite generate_site(uint64_t seed, SiteKind kind, size_t n_pages, size_t branching) {
    if (n_pages < 2) throw InvalidArgument("generate_site: n_pages must be >= 2");
    if (branching < 1) throw InvalidArgument("generate_site: branching must be >= 1");

    const Lexicon& lex = lexicon(kind);
    Rng rng = Rng::substream(seed, "site", static_cast<uint64_t>(kind));

    WebSite site;
    site.seed = seed;
    site.kind = kind;
    site.n_pages = n_pages;
    site.branching = branching;
    site.host = std::string(site_kind_name(kind)) + std::to_string(seed % 100000) + ".test";
    {
        std::vector<std::string> names = {"North", "Bright", "Clear", "Maple", "Harbor", "Summit", "Cedar", "Lumen"};
        site.name = names[rng.below(names.size())] + " " + lex.site_suffix;
    }
    site.pages.resize(n_pages);
    for (size_t i = 0; i < n_pages; ++i) site.pages[i].id = static_cast<PageId>(i);

    // Tree below home in heap order: heap node h >= 1 is page h + 1 (page 1 is search).
    auto page_of_heap = [](size_t h) { return h == 0 ? kHomePage : static_cast<PageId>(h + 1); };
    const size_t tree_nodes = n_pages - 1;
    for (size_t h = 1; h < tree_nodes; ++h) {
        const PageId p = page_of_heap(h);
        const PageId parent = page_of_heap((h - 1) / branching);
        site.pages[static_cast<size_t>(p)].parent = parent;
        site.pages[static_cast<size_t>(parent)].children.push_back(p);
    }

    std::vector<std::string> categories = lex.categories;
    rng.shuffle(categories);
    std::vector<std::pair<size_t, size_t>> combos;
    for (size_t a = 0; a < lex.adjectives.size(); ++a) {
        for (size_t b = 0; b < lex.nouns.size(); ++b) combos.emplace_back(a, b);
    }
    rng.shuffle(combos);
    size_t next_cat = 0, next_item = 0;
    std::set<std::string> used_attrs;
    for (size_t i = 2; i < n_pages; ++i) {
        Page& p = site.pages[i];
        p.is_item = p.children.empty();
        if (p.is_item) {
            const auto [a, b] = combos[next_item++ % combos.size()];
            p.title = lex.adjectives[a] + " " + lex.nouns[b];
            if (next_item > combos.size()) p.title += " " + std::to_string(next_item / combos.size());
            p.attribute = attribute_for(kind, rng, used_attrs);
            p.url = "http://" + site.host + "/p/" + std::to_string(i) + "/";
        } else {
            p.title = categories[next_cat % categories.size()];
            if (next_cat >= categories.size()) p.title += " " + std::to_string(next_cat / categories.size() + 1);
            ++next_cat;
            p.url = "http://" + site.host + "/c/" + std::to_string(i) + "/";
        }
    }
    site.pages[kHomePage].title = site.name;
    site.pages[kHomePage].url = "http://" + site.host + "/";
    site.pages[kResultsPage].title = "Search results";
    site.pages[kResultsPage].url = "http://" + site.host + "/search/";

    NodeId next_id = 1;
    auto add = [&](Page& p, std::string role, std::string name, NodeId container = 0) -> PageElement& {
        PageElement e;
        e.id = next_id++;
        e.role = std::move(role);
        e.name = std::move(name);
        e.container = container;
        p.elements.push_back(std::move(e));
        return p.elements.back();
    };
    const std::vector<PageId> items = [&] {
        std::vector<PageId> v;
        for (const auto& p : site.pages) {
            if (p.is_item) v.push_back(p.id);
        }
        return v;
    }();

    for (Page& p : site.pages) {
        p.root_id = next_id++;
        if (p.id == kHomePage) {
            add(p, "heading", site.name);
            add(p, "textbox", "").is_search_box = true;
            add(p, "button", "Search").is_search_button = true;
            const NodeId nav = add(p, "list", "Categories").id;
            for (PageId c : p.children) add(p, "link", site.page(c).title, nav).link_target = c;
            add(p, "text", "Welcome to " + site.name);
        } else if (p.id == kResultsPage) {
            add(p, "heading", "Search results");
            add(p, "textbox", "").is_search_box = true;
            add(p, "button", "Search").is_search_button = true;
            p.results_container = add(p, "list", "Results").id;
            add(p, "link", "Home").link_target = kHomePage;
        } else if (p.is_item) {
            add(p, "heading", p.title);
            add(p, "text", lex.attribute_label + ": " + p.attribute);
            const std::string& parent_title = site.page(*p.parent).title;
            add(p, "text", "Listed under " + parent_title + ".");
            if (items.size() > 1) {
                const NodeId rel = add(p, "list", "Related").id;
                std::set<PageId> picked;
                const size_t want = std::min<size_t>(2, items.size() - 1);
                while (picked.size() < want) {
                    const PageId other = items[rng.below(items.size())];
                    if (other != p.id) picked.insert(other);
                }
                for (PageId o : picked) add(p, "link", site.page(o).title, rel).link_target = o;
            }
            add(p, "link", "Back to " + (*p.parent == kHomePage ? std::string("Home") : parent_title)).link_target =
                *p.parent;
            add(p, "link", "Home").link_target = kHomePage;
        } else {
            add(p, "heading", p.title);
            add(p, "text", "Browse " + p.title);
            const NodeId list = add(p, "list", "Contents").id;
            for (PageId c : p.children) add(p, "link", site.page(c).title, list).link_target = c;
            add(p, "link", "Home").link_target = kHomePage;
        }
    }
    site.result_link_ids.assign(n_pages, 0);
    for (PageId it : items) site.result_link_ids[static_cast<size_t>(it)] = next_id++;
    return site;
}

}  // namespace webdream
