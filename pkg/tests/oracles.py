"""Independent reference implementations the tests compare against.

Everything here is written the slow, obvious way on purpose: plain
loops, queues, and dictionaries.  None of it shares code with the
package so a bug in the fast path cannot hide in its own oracle.
"""

from collections import Counter, deque

import numpy as np

NODATA = 65535


def flood_fill_components(labels: np.ndarray, valid: np.ndarray, connectivity: int = 4) -> np.ndarray:
    """Queue-based component labeling, first-encounter scan order ids."""
    h, w = labels.shape
    if connectivity == 4:
        steps = ((-1, 0), (1, 0), (0, -1), (0, 1))
    else:
        steps = tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0))
    out = np.zeros((h, w), dtype=np.uint32)
    next_id = 0
    for sy in range(h):
        for sx in range(w):
            if not valid[sy, sx] or out[sy, sx]:
                continue
            next_id += 1
            out[sy, sx] = next_id
            q = deque([(sy, sx)])
            while q:
                y, x = q.popleft()
                for dy, dx in steps:
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and valid[ny, nx] and not out[ny, nx] \
                            and labels[ny, nx] == labels[y, x]:
                        out[ny, nx] = next_id
                        q.append((ny, nx))
    return out


def naive_dbscan(data: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Textbook queue DBSCAN over a full O(n^2) distance matrix."""
    n = data.shape[0]
    d2 = ((data[:, None, :] - data[None, :, :]) ** 2).sum(axis=2)
    nbrs = [np.nonzero(d2[i] <= eps * eps)[0] for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in nbrs])
    labels = np.zeros(n, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] != 0 or not core[i]:
            continue
        cluster += 1
        labels[i] = cluster
        q = deque([i])
        while q:
            p = q.popleft()
            if not core[p]:
                continue
            for nb in nbrs[p]:
                if labels[nb] == 0:
                    labels[nb] = cluster
                    q.append(nb)
    return labels


def naive_lloyd(data: np.ndarray, centroids: np.ndarray, max_iters: int, tol: float):
    """Straight Lloyd iterations from given starting centroids.

    Refuses data that empties a cluster; callers pick inputs where the
    repair path of the real implementation never fires.
    """
    cents = centroids.astype(np.float64).copy()
    k = cents.shape[0]
    assign = None
    for _ in range(max_iters):
        d2 = ((data[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
        assert len(set(assign.tolist())) == k, "oracle hit an empty cluster"
        new = np.stack([data[assign == j].mean(axis=0) for j in range(k)])
        movement = float(np.sqrt(((new - cents) ** 2).sum(axis=1)).max())
        cents = new
        if movement == 0.0 or movement < tol:
            break
    d2 = ((data[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=1)
    cost = float(((data - cents[assign]) ** 2).sum())
    return assign, cents, cost


def mode_by_counting(votes) -> tuple[int, float]:
    """Exhaustive count; smallest id wins ties."""
    c = Counter(int(v) for v in votes)
    best = min(c, key=lambda v: (-c[v], v))
    return best, c[best] / len(votes)


def argmax_segments(width: int, height: int, masks: list[tuple[float, np.ndarray]]) -> np.ndarray:
    """Per-pixel argmax over covering masks, then dense descending-score ids.

    masks: list of (score, bool grid).  Ties go to the lower mask index.
    """
    owner = np.full((height, width), -1, dtype=np.int64)
    for y in range(height):
        for x in range(width):
            best = None
            for i, (score, grid) in enumerate(masks):
                if grid[y, x] and (best is None or score > masks[best][0]):
                    best = i
            if best is not None:
                owner[y, x] = best
    order = sorted(set(owner[owner >= 0].tolist()), key=lambda i: (-masks[i][0], i))
    remap = {m: j + 1 for j, m in enumerate(order)}
    out = np.zeros((height, width), dtype=np.uint32)
    for y in range(height):
        for x in range(width):
            if owner[y, x] >= 0:
                out[y, x] = remap[owner[y, x]]
    return out


def vote_denoise(
    labels: np.ndarray,
    seg: np.ndarray,
    unsure_id: int,
    mode: str = "relabel_all",
    min_margin: float = 0.0,
    unsure_votes: bool = False,
) -> np.ndarray:
    """Dictionary-based per-segment vote; background untouched."""
    out = labels.copy()
    for sid in sorted(set(seg[seg > 0].tolist())):
        where = (seg == sid) & (labels != NODATA)
        votes = Counter(int(v) for v in labels[where])
        if not unsure_votes and unsure_id in votes and sum(votes.values()) > votes[unsure_id]:
            del votes[unsure_id]
        total = sum(votes.values())
        if total == 0:
            continue
        winner = min(votes, key=lambda v: (-votes[v], v))
        if votes[winner] / total < min_margin:
            continue
        target = where if mode == "relabel_all" else where & (labels == unsure_id)
        out[target] = winner
    return out


def stray_count(labels: np.ndarray, window: int) -> int:
    """Sliding-window scan, one pixel at a time."""
    r = window // 2
    h, w = labels.shape
    n = 0
    for y in range(h):
        for x in range(w):
            if labels[y, x] == NODATA:
                continue
            saw_valid = False
            saw_same = False
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    if dy == 0 and dx == 0:
                        continue
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] != NODATA:
                        saw_valid = True
                        if labels[ny, nx] == labels[y, x]:
                            saw_same = True
            if saw_valid and not saw_same:
                n += 1
    return n


def tally_confusion(ref: np.ndarray, pred: np.ndarray, unsure_id: int | None = None) -> dict:
    """Per-pixel dictionary tally; returns {(ref_class, pred_class): n}."""
    out: dict = {}
    h, w = ref.shape
    for y in range(h):
        for x in range(w):
            a, b = int(ref[y, x]), int(pred[y, x])
            if a == NODATA or b == NODATA:
                continue
            if unsure_id is not None and a == unsure_id:
                continue
            out[(a, b)] = out.get((a, b), 0) + 1
    return out
