/**
 * A session binds the dashboard to one live campaign. It owns the current
 * view model and serializes writes: while an observation is in flight the
 * session refuses further ones, so one click means one POST.
 */

import { AdvisorClient } from "./api.js";
import { buildView, type CampaignView } from "./view.js";

export interface ConnectOptions {
  campaignId?: string;
  create?: {
    lambda: number;
    seed: number;
    intercept: boolean;
    alternatives: number[][];
  };
}

export class CampaignSession {
  private current: CampaignView;
  private inFlight = false;

  private constructor(
    private readonly client: AdvisorClient,
    private readonly campaignId: string,
    view: CampaignView,
  ) {
    this.current = view;
  }

  /** Attach to an existing campaign or create a fresh one, then load the view. */
  static async connect(client: AdvisorClient, options: ConnectOptions): Promise<CampaignSession> {
    let id = options.campaignId;
    if (!id) {
      if (!options.create) {
        throw new Error("connect needs a campaign id or creation parameters");
      }
      const created = await client.createCampaign(options.create);
      id = created.id;
    }
    const view = await loadView(client, id);
    return new CampaignSession(client, id, view);
  }

  get view(): CampaignView {
    return this.current;
  }

  get busy(): boolean {
    return this.inFlight;
  }

  /** Re-read everything from the service without recording anything. */
  async refresh(): Promise<CampaignView> {
    this.current = await loadView(this.client, this.campaignId);
    return this.current;
  }

  /**
   * Record one +/-1 outcome. Exactly one POST goes out per accepted call;
   * calls made while a request is pending are rejected. On failure the view
   * is left untouched so the screen keeps showing confirmed server state.
   */
  async recordOutcome(alternativeId: number, label: 1 | -1): Promise<CampaignView> {
    if (this.inFlight) {
      throw new Error("an observation is already in flight");
    }
    this.inFlight = true;
    try {
      await this.client.postObservation(this.campaignId, alternativeId, label);
      this.current = await loadView(this.client, this.campaignId);
      return this.current;
    } finally {
      this.inFlight = false;
    }
  }
}

async function loadView(client: AdvisorClient, id: string): Promise<CampaignView> {
  const info = await client.getCampaign(id);
  const [recommendation, implementation] = await Promise.all([
    client.getRecommendation(id),
    client.getImplementation(id),
  ]);
  return buildView(info, recommendation, implementation);
}
