// Latest-wins frame fetching for one panel.
//
// The sliders can emit far more updates than the network can serve, so each
// panel keeps at most one request in flight and remembers only the newest
// requested URL. When the in-flight request settles, the newest pending one
// is issued and everything older is dropped. Every accepted request gets a
// monotonically increasing sequence number and a frame is only shown if its
// sequence is newer than the one on screen, so the displayed sequence never
// goes backwards. A failed request shows an error badge via onError but never
// clears the last good frame.

export type FetchFn<T> = (url: string) => Promise<T>;

export interface PanelEvents<T> {
  onFrame: (payload: T, seq: number) => void;
  onError?: (err: unknown, seq: number) => void;
}

interface Pending {
  url: string;
  seq: number;
}

export class LatestWinsFetcher<T> {
  private nextSeq = 0;
  private shownSeq = -1;
  private inFlight = false;
  private pending: Pending | null = null;

  constructor(
    private fetchImpl: FetchFn<T>,
    private events: PanelEvents<T>,
  ) {}

  // Ask for a new frame. Returns the sequence number assigned to the request.
  request(url: string): number {
    const seq = this.nextSeq++;
    this.pending = { url, seq };
    this.pump();
    return seq;
  }

  get displayedSeq(): number {
    return this.shownSeq;
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private pump(): void {
    if (this.inFlight || this.pending === null) {
      return;
    }
    const { url, seq } = this.pending;
    this.pending = null;
    this.inFlight = true;
    this.fetchImpl(url).then(
      (payload) => {
        this.inFlight = false;
        if (seq > this.shownSeq) {
          this.shownSeq = seq;
          this.events.onFrame(payload, seq);
        }
        this.pump();
      },
      (err) => {
        this.inFlight = false;
        if (this.events.onError) {
          this.events.onError(err, seq);
        }
        this.pump();
      },
    );
  }
}
