/** Browser entry point: wires the API client, the pick state machine, and
 * the pan/zoom handlers onto the static page in index.html. */

import { ApiClient, ApiError } from "./api.js";
import { PlannerState, type StateSnapshot } from "./state.js";
import { MapTransform, networkExtent, paddedExtent } from "./transform.js";
import type { RuleDocument, UserPayload } from "./types.js";
import { validateRule } from "./validate.js";
import {
  renderAlerts,
  renderLoginForm,
  renderNotice,
  renderResult,
  renderRuleForm,
  renderRuleList,
} from "./view.js";
import { clientToViewBox, panBy, viewBoxAttr, zoomAt, type ViewBox } from "./zoom.js";

const COMPACT_QUERY = "(max-width: 640px)";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient();
  const network = await api.getNetwork();
  const mapHost = el<HTMLDivElement>("map");
  mapHost.innerHTML = await api.getNetworkMapSvg();
  const svg = mapHost.querySelector("svg");
  if (svg === null) {
    throw new Error("map did not render");
  }
  const transform = MapTransform.fromSvg(mapHost.innerHTML);
  const extent = paddedExtent(networkExtent(network));
  const state = new PlannerState(api, extent);
  let user: UserPayload | null = null;
  let segmentIds = new Set(network.segments.map((s) => s.id));

  // Pan and zoom over the vector map.
  const initialViewBox: ViewBox = { x: 0, y: 0, w: transform.widthPx, h: transform.heightPx };
  let viewBox = { ...initialViewBox };
  let dragging = false;
  let moved = false;
  let last = { x: 0, y: 0 };
  const applyViewBox = () => svg.setAttribute("viewBox", viewBoxAttr(viewBox));
  applyViewBox();

  svg.addEventListener("mousedown", (event) => {
    dragging = true;
    moved = false;
    last = { x: event.clientX, y: event.clientY };
  });
  svg.addEventListener("mousemove", (event) => {
    if (!dragging) {
      return;
    }
    const dx = event.clientX - last.x;
    const dy = event.clientY - last.y;
    if (Math.abs(dx) + Math.abs(dy) > 2) {
      moved = true;
    }
    viewBox = panBy(viewBox, dx, dy, svg.clientWidth, svg.clientHeight);
    last = { x: event.clientX, y: event.clientY };
    applyViewBox();
  });
  const stopDrag = () => {
    dragging = false;
  };
  svg.addEventListener("mouseup", stopDrag);
  svg.addEventListener("mouseleave", stopDrag);
  svg.addEventListener("wheel", (event) => {
    event.preventDefault();
    const factor = event.deltaY < 0 ? 1 / 1.2 : 1.2;
    viewBox = zoomAt(
      viewBox,
      event.offsetX / svg.clientWidth,
      event.offsetY / svg.clientHeight,
      factor,
      initialViewBox,
    );
    applyViewBox();
  });

  // A plain click (no drag) picks origin, then destination.
  svg.addEventListener("click", (event) => {
    if (moved) {
      return;
    }
    const pixel = clientToViewBox(
      viewBox,
      event.offsetX,
      event.offsetY,
      svg.clientWidth,
      svg.clientHeight,
    );
    void state.pick(transform.toWorld(pixel));
  });

  // Result and notice panels re-render on every state change.
  const resultHost = el<HTMLDivElement>("result");
  const noticeHost = el<HTMLDivElement>("notice");
  const phaseHost = el<HTMLParagraphElement>("phase");
  state.onChange(async (snap: StateSnapshot) => {
    phaseHost.textContent =
      snap.phase === "pickOrigin"
        ? "Click the map to choose a starting point."
        : snap.phase === "pickDestination"
          ? "Now click the destination."
          : snap.phase === "planning"
            ? "Planning..."
            : "Route ready.";
    noticeHost.innerHTML = renderNotice(snap.notice);
    if (snap.notice?.kind === "login") {
      el<HTMLDivElement>("account").hidden = false;
    }
    if (snap.result !== null) {
      resultHost.innerHTML = renderResult(snap.result, snap.compact);
      mapHost.innerHTML = await api.getMapSvg(snap.result.map_url);
      const routed = mapHost.querySelector("svg");
      routed?.setAttribute("viewBox", viewBoxAttr(viewBox));
    } else {
      resultHost.innerHTML = "";
    }
  });

  // Compact mode: viewport auto-switch plus a manual toggle.
  const media = window.matchMedia(COMPACT_QUERY);
  const compactToggle = el<HTMLInputElement>("compact-toggle");
  const applyCompact = () => state.setCompact(media.matches || compactToggle.checked);
  media.addEventListener("change", applyCompact);
  compactToggle.addEventListener("change", applyCompact);
  applyCompact();

  // Travel instant; only usable once signed in.
  const whenInput = el<HTMLInputElement>("when");
  const syncWhenPicker = () => {
    whenInput.disabled = !state.canPickDate();
    whenInput.title = state.canPickDate() ? "" : "Log in to plan for another time.";
  };
  whenInput.addEventListener("change", () => {
    state.setWhen(whenInput.value === "" ? null : whenInput.value);
  });
  syncWhenPicker();

  // Account box: login form, then rules (admins) and alerts.
  const accountHost = el<HTMLDivElement>("account");
  const rulesHost = el<HTMLDivElement>("rules");
  const alertsHost = el<HTMLDivElement>("alerts");
  accountHost.innerHTML = renderLoginForm();

  const refreshRules = async () => {
    const rules = await api.getRules();
    rulesHost.innerHTML =
      renderRuleForm(user?.role ?? null) + renderRuleList(rules);
    wireRuleForm(rules);
  };

  const refreshAlerts = async () => {
    if (!api.hasSession()) {
      return;
    }
    alertsHost.innerHTML = renderAlerts(await api.getAlerts());
  };

  const wireRuleForm = (rules: RuleDocument[]) => {
    const form = rulesHost.querySelector<HTMLFormElement>("form[data-form=rule]");
    if (form !== null) {
      form.addEventListener("submit", async (event) => {
        event.preventDefault();
        const rule = ruleFromForm(new FormData(form));
        const errors = validateRule(rule, segmentIds);
        const errorsHost = form.querySelector<HTMLDivElement>(".form-errors");
        if (errors.length > 0) {
          if (errorsHost !== null) {
            errorsHost.textContent = errors.join("; ");
          }
          return; // no request leaves the page while the rule is invalid
        }
        try {
          if (rules.some((existing) => existing.id === rule.id)) {
            await api.updateRule(rule);
          } else {
            await api.addRule(rule);
          }
          mapHost.innerHTML = await api.getNetworkMapSvg();
          await refreshRules();
        } catch (error) {
          if (errorsHost !== null) {
            errorsHost.textContent =
              error instanceof ApiError ? error.message : "Saving the rule failed.";
          }
        }
      });
    }
    rulesHost.querySelectorAll<HTMLButtonElement>("button[data-action=delete-rule]").forEach(
      (button) => {
        button.addEventListener("click", async () => {
          await api.deleteRule(Number(button.dataset.ruleId));
          mapHost.innerHTML = await api.getNetworkMapSvg();
          await refreshRules();
        });
      },
    );
  };

  accountHost.addEventListener("submit", async (event) => {
    const form = event.target as HTMLFormElement;
    if (form.dataset.form !== "login") {
      return;
    }
    event.preventDefault();
    const data = new FormData(form);
    try {
      const session = await api.login(String(data.get("username")), String(data.get("password")));
      user = session.user;
      accountHost.innerHTML = `<p>Signed in as ${session.user.username} (${session.user.role}).</p>`;
      syncWhenPicker();
      await refreshRules();
      await refreshAlerts();
    } catch {
      form.querySelectorAll("input").forEach((input) => input.classList.add("invalid"));
    }
  });

  await refreshRules();
}

function ruleFromForm(data: FormData): RuleDocument {
  const scheduleKind = String(data.get("schedule_kind"));
  const schedule =
    scheduleKind === "WEEKLY"
      ? {
          kind: "WEEKLY" as const,
          weekdays: String(data.get("weekdays") ?? "")
            .split(",")
            .map((day) => day.trim())
            .filter((day) => day !== ""),
          start_minute: Number(data.get("start_minute")),
          end_minute: Number(data.get("end_minute")),
        }
      : {
          kind: "ABSOLUTE" as const,
          start_at: String(data.get("start_at") ?? ""),
          ...(data.get("end_at") ? { end_at: String(data.get("end_at")) } : {}),
        };
  const multiplierRaw = data.get("multiplier");
  return {
    id: Number(data.get("id")),
    segment_id: Number(data.get("segment_id")),
    kind: String(data.get("kind")) as RuleDocument["kind"],
    schedule,
    ...(multiplierRaw !== null && multiplierRaw !== "" ? { multiplier: Number(multiplierRaw) } : {}),
  };
}

boot().catch((error) => {
  document.body.insertAdjacentHTML(
    "beforeend",
    `<div class="banner error">The planner failed to start: ${String(error)}</div>`,
  );
});
