#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "zsmstm/nn/grad_check.hpp"
#include "zsmstm/nn/graph.hpp"

using namespace zsmstm;
using nn::Graph;
using nn::Param;
using nn::ParamStore;
using nn::Var;

namespace {

void fill_normal(Param<double>& p, Rng& rng, double scale = 1.0) {
  for (auto& v : p.value.data) v = rng.normal() * scale;
}

using Builder = std::function<Var<double>(Graph<double>&)>;

double check(std::vector<Param<double>*> group, const Builder& f) {
  return nn::grad_check<double>(group, f, 1e-4);
}

}  // namespace

TEST_CASE("gradient of a plain sum is all ones") {
  ParamStore<double> ps;
  Param<double>& x = ps.add("x", 3, 4);
  Rng rng(1);
  fill_normal(x, rng);
  Graph<double> g;
  g.backward(g.sum_all(g.leaf(x)));
  for (double v : x.grad.data) CHECK(v == 1.0);
}

TEST_CASE("mse of a tensor against itself has zero gradient") {
  ParamStore<double> ps;
  Param<double>& x = ps.add("x", 4, 5);
  Rng rng(2);
  fill_normal(x, rng);
  Graph<double> g;
  Var<double> v = g.leaf(x);
  g.backward(g.mean_all(g.square(g.sub(v, v))));
  for (double gv : x.grad.data) CHECK(gv == 0.0);
}

TEST_CASE("square function at x = 3 matches the analytic slope tightly") {
  ParamStore<double> ps;
  Param<double>& x = ps.add("x", 1, 1);
  x.value.data[0] = 3.0;
  const double err = check({&x}, [&](Graph<double>& g) {
    Var<double> v = g.leaf(x);
    return g.sum_all(g.mul(v, v));
  });
  CHECK(err < 1e-8);
}

TEST_CASE("matmul gradients pass finite differences in all transpose modes") {
  Rng rng(3);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      ParamStore<double> ps;
      Param<double>& a = ps.add("a", ta ? 6 : 4, ta ? 4 : 6);
      Param<double>& b = ps.add("b", tb ? 5 : 6, tb ? 6 : 5);
      fill_normal(a, rng);
      fill_normal(b, rng);
      const double err = check({&a, &b}, [&](Graph<double>& g) {
        return g.mean_all(
            g.tanh_(g.matmul(g.leaf(a), g.leaf(b), ta, tb)));
      });
      CHECK(err < 1e-6);
    }
  }
}

TEST_CASE("elementwise and reduction ops pass finite differences") {
  Rng rng(4);
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 3, 7);
  Param<double>& b = ps.add("b", 3, 7);
  Param<double>& bias = ps.add("bias", 1, 7);
  fill_normal(a, rng);
  fill_normal(b, rng);
  fill_normal(bias, rng);

  const std::vector<std::pair<const char*, Builder>> cases = {
      {"add", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.add(g.leaf(a), g.leaf(b))));
       }},
      {"sub", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.sub(g.leaf(a), g.leaf(b))));
       }},
      {"mul", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.mul(g.leaf(a), g.leaf(b))));
       }},
      {"scale", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.scale(g.leaf(a), -1.7)));
       }},
      {"add_bias", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.add_bias(g.leaf(a), g.leaf(bias))));
       }},
      {"row_sum", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.row_sum(g.leaf(a))));
       }},
      {"mean_rows", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.mean_rows(g.leaf(a))));
       }},
      {"repeat_rows", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.repeat_rows(g.leaf(bias), 5)));
       }},
      {"tanh", [&](Graph<double>& g) {
         return g.mean_all(g.tanh_(g.leaf(a)));
       }},
      {"sigmoid", [&](Graph<double>& g) {
         return g.mean_all(g.sigmoid_(g.leaf(a)));
       }},
      {"abs", [&](Graph<double>& g) {
         return g.mean_all(g.abs_(g.leaf(a)));
       }},
  };
  for (const auto& [name, builder] : cases) {
    INFO(name);
    CHECK(check({&a, &b, &bias}, builder) < 1e-6);
  }
}

TEST_CASE("sqrt gradient passes away from zero and is zero at zero") {
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 2, 3);
  Rng rng(5);
  for (auto& v : a.value.data) v = 0.5 + rng.uniform();
  const double err = check({&a}, [&](Graph<double>& g) {
    return g.mean_all(g.sqrt_(g.leaf(a)));
  });
  CHECK(err < 1e-6);

  Param<double>& z = ps.add("z", 1, 1);
  z.value.data[0] = 0.0;
  Graph<double> g;
  g.backward(g.sum_all(g.sqrt_(g.leaf(z))));
  CHECK(z.grad.data[0] == 0.0);
}

TEST_CASE("shape ops pass finite differences") {
  Rng rng(6);
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 4, 6);
  Param<double>& b = ps.add("b", 4, 3);
  Param<double>& c = ps.add("c", 2, 6);
  fill_normal(a, rng);
  fill_normal(b, rng);
  fill_normal(c, rng);

  const std::vector<std::pair<const char*, Builder>> cases = {
      {"concat_cols", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.concat_cols(
             {g.leaf(a), g.leaf(b), g.leaf(a)})));
       }},
      {"concat_rows", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.concat_rows(
             {g.leaf(a), g.leaf(c), g.leaf(a)})));
       }},
      {"slice_rows", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.slice_rows(g.leaf(a), 1, 3)));
       }},
      {"slice_cols", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.slice_cols(g.leaf(a), 2, 5)));
       }},
      {"reshape", [&](Graph<double>& g) {
         return g.mean_all(g.square(g.reshape(g.leaf(a), 2, 12)));
       }},
  };
  for (const auto& [name, builder] : cases) {
    INFO(name);
    CHECK(check({&a, &b, &c}, builder) < 1e-6);
  }
}

TEST_CASE("softmax and layer_norm gradients pass finite differences") {
  Rng rng(7);
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 5, 5);
  Param<double>& gamma = ps.add("gamma", 1, 5);
  Param<double>& beta = ps.add("beta", 1, 5);
  fill_normal(a, rng);
  for (auto& v : gamma.value.data) v = 1.0 + 0.1 * rng.normal();
  fill_normal(beta, rng, 0.1);

  CHECK(check({&a}, [&](Graph<double>& g) {
          return g.mean_all(g.square(g.softmax_rows(g.leaf(a))));
        }) < 1e-6);
  CHECK(check({&a}, [&](Graph<double>& g) {
          return g.mean_all(g.square(g.softmax_rows(g.leaf(a), true)));
        }) < 1e-6);
  CHECK(check({&a, &gamma, &beta}, [&](Graph<double>& g) {
          return g.mean_all(g.square(
              g.layer_norm_rows(g.leaf(a), g.leaf(gamma), g.leaf(beta),
                                1e-6)));
        }) < 1e-6);
}

TEST_CASE("relu gradient passes away from the kink") {
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 3, 4);
  Rng rng(8);
  for (auto& v : a.value.data) {
    v = rng.normal();
    if (std::abs(v) < 1e-2) v += v < 0 ? -1e-2 : 1e-2;
  }
  CHECK(check({&a}, [&](Graph<double>& g) {
          return g.mean_all(g.square(g.relu_(g.leaf(a))));
        }) < 1e-6);
}

TEST_CASE("detach blocks gradient flow") {
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 2, 2);
  Rng rng(9);
  fill_normal(a, rng);
  Graph<double> g;
  Var<double> v = g.leaf(a);
  Var<double> loss = g.sum_all(g.mul(g.detach(v), v));
  g.backward(loss);
  // d/da of detach(a)*a is detach(a), not 2a.
  for (std::size_t i = 0; i < a.value.size(); ++i)
    CHECK(a.grad.data[i] == doctest::Approx(a.value.data[i]).epsilon(1e-12));
}

TEST_CASE("frozen leaves receive no gradient") {
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 2, 3);
  Param<double>& w = ps.add("w", 3, 2);
  Rng rng(10);
  fill_normal(a, rng);
  fill_normal(w, rng);
  Graph<double> g;
  Var<double> va = g.leaf(a);
  g.freeze_leaves = true;
  Var<double> vw = g.leaf(w);
  g.freeze_leaves = false;
  g.backward(g.sum_all(g.matmul(va, vw)));
  bool a_any = false;
  for (double v : a.grad.data) a_any = a_any || v != 0.0;
  CHECK(a_any);
  for (double v : w.grad.data) CHECK(v == 0.0);
}

TEST_CASE("reset_grads lets two backward passes share one tape") {
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 2, 2);
  Rng rng(11);
  fill_normal(a, rng);

  Graph<double> g;
  Var<double> v = g.leaf(a);
  Var<double> first = g.sum_all(g.square(v));
  g.backward(first);
  const std::vector<double> g1 = a.grad.data;

  g.reset_grads();
  for (double gv : a.grad.data) CHECK(gv == 0.0);

  Var<double> second = g.sum_all(g.square(v));
  g.backward(second);
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(a.grad.data[i] == doctest::Approx(g1[i]).epsilon(1e-12));
}

TEST_CASE("unreachable parameters keep zero gradients") {
  ParamStore<double> ps;
  Param<double>& a = ps.add("a", 2, 2);
  Param<double>& unused = ps.add("unused", 3, 3);
  Rng rng(12);
  fill_normal(a, rng);
  fill_normal(unused, rng);
  Graph<double> g;
  g.backward(g.sum_all(g.square(g.leaf(a))));
  for (double v : unused.grad.data) CHECK(v == 0.0);
}
