import init, { ring_heatmap, degree_plot, community_heatmap } from "./pkg/mentionnet_web.js";

function show(section, result, describe) {
  const info = section.querySelector(".info");
  const plot = section.querySelector(".plot");
  const r = JSON.parse(result);
  if (!r.ok) {
    info.textContent = r.error;
    info.className = "info error";
    plot.innerHTML = "";
    return;
  }
  info.className = "info";
  info.textContent = describe(r);
  plot.innerHTML = r.svg;
}

function wire(id, run, describe) {
  const section = document.getElementById(id);
  const form = section.querySelector("form");
  const go = () => {
    const f = form.elements;
    const num = (name) => Number(f[name].value);
    show(section, run(num, f), describe);
  };
  form.addEventListener("submit", (e) => {
    e.preventDefault();
    go();
  });
  go();
}

await init();

wire(
  "rings",
  (num) => ring_heatmap(num("users"), num("tweets"), num("ring_size"), num("per_pair"), num("noise"), num("seed")),
  (r) => {
    const found = r.rings.map((g) => `${g.targets.length} targets, density ${g.density.toFixed(2)}: ${g.targets.join(" ")}`);
    return `${r.nodes} nodes, ${r.edges} edges\nplanted: ${r.planted.join(" ")}\n` +
      (found.length ? found.join("\n") : "no rings at default thresholds");
  },
);

wire(
  "degree",
  (num, f) => degree_plot(num("users"), num("tweets"), num("zipf"), num("seed"), f.hill.checked),
  (r) => `${r.nodes} nodes; alpha = ${r.tail.exponent.toFixed(3)} (${r.tail.method}, xmin ${r.tail.xmin}, ` +
    `${r.tail.n_tail} tail points${r.tail.reliable ? "" : ", unreliable"})`,
);

wire(
  "communities",
  (num) => community_heatmap(num("blocks"), num("block_size"), num("p_in"), num("p_out"), num("seed")),
  (r) => `${r.edges} edges; ${r.communities} communities, modularity ${r.modularity.toFixed(3)}; ` +
    (r.recovered ? "planted blocks recovered" : "planted blocks not recovered exactly"),
);
