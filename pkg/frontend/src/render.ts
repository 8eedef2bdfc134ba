import { Vec2 } from './protocol.js'
import { ViewModel } from './view.js'

// Subset of CanvasRenderingContext2D the renderer touches — tests drive
// it with a recording fake.
export interface Draw2D {
    fillStyle: string | CanvasGradient | CanvasPattern
    strokeStyle: string | CanvasGradient | CanvasPattern
    lineWidth: number
    globalAlpha: number
    font: string
    clearRect(x: number, y: number, w: number, h: number): void
    fillRect(x: number, y: number, w: number, h: number): void
    strokeRect(x: number, y: number, w: number, h: number): void
    beginPath(): void
    arc(x: number, y: number, r: number, a0: number, a1: number): void
    moveTo(x: number, y: number): void
    lineTo(x: number, y: number): void
    stroke(): void
    fill(): void
    fillText(text: string, x: number, y: number): void
}

export const WIDTH = 800
export const HEIGHT = 600

const STAGE_COUNT = 4
const WITHERED = [0x8b, 0x5a, 0x2b] // brown
const BLOOMING = [0xff, 0x9e, 0xcb] // pink
export const PARTICIPANT_COLOR = '#d62728'
export const PROJECTILE_COLOR = '#1f77b4'

const V_MAX = 0.6 // m/s, the HUD saturation ring

export const stageColor = (stageIndex: number): string => {
    const t = Math.min(Math.max(stageIndex / (STAGE_COUNT - 1), 0), 1)
    const c = WITHERED.map((w, i) => Math.round(w + (BLOOMING[i] - w) * t))
    return `rgb(${c[0]},${c[1]},${c[2]})`
}

const toScreen = (view: ViewModel, p: Vec2): Vec2 => ({
    x: WIDTH / 2 + (p.x - view.camera.center.x) / view.camera.metersPerPixel,
    y: HEIGHT / 2 - (p.y - view.camera.center.y) / view.camera.metersPerPixel,
})

const drawTrail = (ctx: Draw2D, view: ViewModel, trail: Vec2[], color: string): void => {
    // older samples fade out; drawn as short segments so alpha can ramp
    for (let i = 1; i < trail.length; i++) {
        ctx.globalAlpha = i / trail.length
        ctx.strokeStyle = color
        ctx.beginPath()
        const a = toScreen(view, trail[i - 1])
        const b = toScreen(view, trail[i])
        ctx.moveTo(a.x, a.y)
        ctx.lineTo(b.x, b.y)
        ctx.stroke()
    }
    ctx.globalAlpha = 1
}

const drawHud = (ctx: Draw2D, view: ViewModel): void => {
    const size = 120
    const x0 = WIDTH - size - 10
    const y0 = 10
    const cx = x0 + size / 2
    const cy = y0 + size / 2
    const scale = size / 2 / 1.0 // inset spans ±1 m / ±1 m/s

    ctx.fillStyle = 'rgba(0,0,0,0.35)'
    ctx.fillRect(x0, y0, size, size)
    ctx.strokeStyle = '#888'
    ctx.lineWidth = 1
    ctx.strokeRect(x0, y0, size, size)

    // saturation ring: commands can never leave this circle
    ctx.strokeStyle = '#aaa'
    ctx.beginPath()
    ctx.arc(cx, cy, V_MAX * scale, 0, Math.PI * 2)
    ctx.stroke()

    const st = view.latest
    const dx = st ? st.platform.dx : 0
    const dy = st ? st.platform.dy : 0
    const vx = st ? st.platform.vx : 0
    const vy = st ? st.platform.vy : 0

    ctx.fillStyle = '#fff'
    ctx.beginPath()
    ctx.arc(cx + dx * scale, cy - dy * scale, 3, 0, Math.PI * 2)
    ctx.fill()

    ctx.strokeStyle = '#ffd700'
    ctx.beginPath()
    ctx.moveTo(cx, cy)
    ctx.lineTo(cx + vx * scale, cy - vy * scale)
    ctx.stroke()

    ctx.fillStyle = '#ccc'
    ctx.font = '10px monospace'
    ctx.fillText('platform', x0 + 4, y0 + size - 4)
}

// Pure in the ViewModel: same view -> same sequence of draw calls.
export const renderFrame = (ctx: Draw2D, view: ViewModel): void => {
    ctx.globalAlpha = 1
    ctx.clearRect(0, 0, WIDTH, HEIGHT)
    ctx.fillStyle = '#15241c'
    ctx.fillRect(0, 0, WIDTH, HEIGHT)

    const st = view.latest
    if (!st) {
        ctx.fillStyle = '#ccc'
        ctx.font = '16px sans-serif'
        ctx.fillText(
            view.status === 'connected' ? 'waiting for state…' : `(${view.status})`,
            20, 30)
        return
    }

    for (const tree of st.trees) {
        const p = toScreen(view, tree)
        ctx.fillStyle = stageColor(tree.stage_index)
        ctx.beginPath()
        ctx.arc(p.x, p.y, 14, 0, Math.PI * 2)
        ctx.fill()
    }

    drawTrail(ctx, view, view.participantTrail, PARTICIPANT_COLOR)
    for (const trail of view.projectileTrails.values()) {
        drawTrail(ctx, view, trail, PROJECTILE_COLOR)
    }

    for (const proj of st.projectiles) {
        const p = toScreen(view, proj)
        ctx.fillStyle = PROJECTILE_COLOR
        ctx.beginPath()
        ctx.arc(p.x, p.y, 4, 0, Math.PI * 2)
        ctx.fill()
    }

    const pp = toScreen(view, st.participant)
    ctx.fillStyle = PARTICIPANT_COLOR
    ctx.beginPath()
    ctx.arc(pp.x, pp.y, 6, 0, Math.PI * 2)
    ctx.fill()
    ctx.strokeStyle = PARTICIPANT_COLOR
    ctx.lineWidth = 2
    ctx.beginPath()
    ctx.moveTo(pp.x, pp.y)
    ctx.lineTo(
        pp.x + Math.cos(st.participant.yaw) * 16,
        pp.y - Math.sin(st.participant.yaw) * 16)
    ctx.stroke()

    drawHud(ctx, view)

    if (view.status !== 'connected') {
        ctx.fillStyle = 'rgba(160,30,30,0.85)'
        ctx.fillRect(0, 0, WIDTH, 24)
        ctx.fillStyle = '#fff'
        ctx.font = '13px sans-serif'
        ctx.fillText(`disconnected (${view.status}) — inputs buffered`, 8, 16)
    }
}
