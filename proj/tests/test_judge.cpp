#include <gtest/gtest.h>

#include "support.hpp"
#include "webdream/judge.hpp"
#include "webdream/task.hpp"
#include "webdream/trajectory.hpp"

using namespace webdream;

namespace {

Trajectory replay(const WebEnv& env, const GeneratedTask& gt, const std::vector<Action>& actions,
                  EnvState* final_state = nullptr) {
    Trajectory t;
    t.task = std::make_shared<const Task>(gt.task);
    auto [s, o] = env.reset(gt.task);
    for (const Action& a : actions) {
        t.steps.push_back({o, a, {}, {}, std::nullopt});
        StepResult r = step(s, a);
        s = r.state;
        o = r.obs;
    }
    if (final_state) *final_state = s;
    return t;
}

}  // namespace

TEST(Judge, WitnessesReplayToRewardOne) {
    WebEnv env;
    RuleJudge judge;
    for (const auto& gt : generate_tasks(21, 30, {SiteKind::Shop, SiteKind::Wiki, SiteKind::Forum})) {
        const Trajectory t = replay(env, gt, gt.witness);
        EXPECT_TRUE(t.ended_with_stop());
        EXPECT_EQ(judge.assess(gt.task, t), 1) << gt.task.task_id;
    }
}

TEST(Judge, TruncatedOrUnstoppedScoresZero) {
    WebEnv env;
    const auto gt = generate_tasks(21, 1, {SiteKind::Shop}).front();
    Trajectory t = replay(env, gt, gt.witness);
    t.truncated = true;
    EXPECT_EQ(evaluate(gt.task.goal, t), 0);
    std::vector<Action> no_stop(gt.witness.begin(), gt.witness.end() - 1);
    EXPECT_EQ(evaluate(gt.task.goal, replay(env, gt, no_stop)), 0);
    EXPECT_EQ(evaluate(gt.task.goal, Trajectory{}), 0);
}

TEST(Judge, WrongAnswerScoresZero) {
    WebEnv env;
    const auto gt = generate_tasks(21, 1, {SiteKind::Shop}).front();
    auto actions = gt.witness;
    actions.back() = Action::stop("N/A");
    EXPECT_EQ(evaluate(gt.task.goal, replay(env, gt, actions)), 0);
}

TEST(GoalPredicate, Conditions) {
    const auto obs = parse_tree("url: http://s/p/3/\nroot [1] ''\n  textbox [2] 'blue'");
    GoalPredicate g;
    g.answer = AnswerPattern{"Price", AnswerPattern::Mode::SubstringCI};
    EXPECT_TRUE(goal_holds(g, obs, "the price is"));
    EXPECT_FALSE(goal_holds(g, obs, "cost"));
    g.answer->mode = AnswerPattern::Mode::Exact;
    EXPECT_FALSE(goal_holds(g, obs, "price"));
    g.answer.reset();
    g.terminal_page = "/p/3/";
    EXPECT_TRUE(goal_holds(g, obs, ""));
    g.form.push_back({2, "blue"});
    EXPECT_TRUE(goal_holds(g, obs, ""));
    g.form.back().value = "red";
    EXPECT_FALSE(goal_holds(g, obs, ""));
    EXPECT_EQ(goal_from_json(to_json(g)), g);
    EXPECT_THROW(goal_from_json(nlohmann::json::object()), InvalidArgument);
}

// Every trajectory of at most 3 steps on a 3-page site: the judge agrees with
// an oracle that reads the real terminal state (page and answer) directly.
TEST(Judge, ExhaustiveThreePageSite) {
    TaskGenOptions g;
    g.n_pages = 3;
    g.branching = 1;
    g.tasks_per_site = 1;
    const auto gt = generate_tasks(5, 1, {SiteKind::Shop}, g).front();
    WebEnv env;
    const auto site = env.site_for(gt.task);
    PageId target = -1;
    for (const Page& p : site->pages) {
        if (p.is_item) target = p.id;
    }
    ASSERT_GE(target, 0);
    const std::string price = site->page(target).attribute;

    size_t stopped = 0, successes = 0;
    std::function<void(std::vector<Action>&, const EnvState&, const AccessibilityTree&)> walk =
        [&](std::vector<Action>& prefix, const EnvState& s, const AccessibilityTree& o) {
            for (const Action& a : testkit::all_actions(o, gt.task.vocab)) {
                prefix.push_back(a);
                const StepResult r = step(s, a);
                if (a.type == ActionType::Stop) {
                    EnvState terminal;
                    const Trajectory t = replay(env, gt, prefix, &terminal);
                    const int oracle = terminal.page_id == target && terminal.answer == price ? 1 : 0;
                    EXPECT_EQ(evaluate(gt.task.goal, t), oracle);
                    ++stopped;
                    successes += static_cast<size_t>(oracle);
                } else if (prefix.size() < 3) {
                    walk(prefix, r.state, r.obs);
                } else {
                    EXPECT_EQ(evaluate(gt.task.goal, replay(env, gt, prefix)), 0);
                }
                prefix.pop_back();
            }
        };
    std::vector<Action> prefix;
    const auto [s0, o0] = env.reset(gt.task);
    walk(prefix, s0, o0);
    EXPECT_GT(stopped, 100u);
    EXPECT_GT(successes, 0u);
}
